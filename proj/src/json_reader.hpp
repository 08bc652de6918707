#pragma once

#include <set>
#include <string>

#include "bevlat/errors.hpp"
#include "bevlat/json_io.hpp"

namespace bevlat {

// Strict object reader shared by the JSON converters.
class StrictReader {
public:
    StrictReader(const Json& j, std::string type) : j_(j), type_(std::move(type)) {
        if (!j.is_object()) throw ValidationError(type_ + ": expected a JSON object");
    }

    template <typename T>
    StrictReader& operator()(const std::string& key, T& value) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return *this;
        try {
            it->get_to(value);
        } catch (const Json::exception& e) {
            throw ValidationError(type_ + "." + key + ": " + e.what());
        }
        return *this;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.contains(item.key())) throw ValidationError(type_ + ": unknown key '" + item.key() + "'");
    }

private:
    const Json& j_;
    std::string type_;
    std::set<std::string> seen_;
};

}  // namespace bevlat
