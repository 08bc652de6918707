#include "bevlat/container.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "bevlat/errors.hpp"

namespace bevlat {
namespace {

constexpr std::array<char, 4> kMagic{'B', 'V', 'L', 'T'};
constexpr std::uint32_t kMaxDim = 1u << 16;

template <typename U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes;
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
    std::array<unsigned char, sizeof(U)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw ValidationError("container truncated");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_i32(std::ostream& out, std::int32_t v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_i64(std::ostream& out, std::int64_t v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::int32_t get_i32(std::istream& in) { return std::bit_cast<std::int32_t>(get_le<std::uint32_t>(in)); }
std::int64_t get_i64(std::istream& in) { return std::bit_cast<std::int64_t>(get_le<std::uint64_t>(in)); }
double get_f32(std::istream& in) { return std::bit_cast<float>(get_le<std::uint32_t>(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void write_header(std::ostream& out, PayloadKind kind) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kContainerVersion);
    put_u32(out, static_cast<std::uint32_t>(kind));
}

void read_header(std::istream& in, PayloadKind expected) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ValidationError("not a bevlat container");
    const std::uint32_t version = get_u32(in);
    if (version != kContainerVersion)
        throw ValidationError("unsupported container version " + std::to_string(version));
    const std::uint32_t kind = get_u32(in);
    if (kind != static_cast<std::uint32_t>(expected))
        throw ValidationError("container holds payload kind " + std::to_string(kind) + ", expected " +
                              std::to_string(static_cast<std::uint32_t>(expected)));
}

void write_tensor_body(std::ostream& out, const Tensor3& t) {
    put_u32(out, static_cast<std::uint32_t>(t.channels()));
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (double v : t.values()) put_f32(out, v);
}

Tensor3 read_tensor_body(std::istream& in) {
    const std::uint32_t c = get_u32(in), h = get_u32(in), w = get_u32(in);
    if (c > kMaxDim || h > kMaxDim || w > kMaxDim) throw ValidationError("tensor shape out of range");
    Tensor3 t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (double& v : t.values()) v = get_f32(in);
    return t;
}

template <typename Fn>
void with_output(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    fn(out);
    if (!out) throw ValidationError("failed writing " + path.string());
}

template <typename Fn>
auto with_input(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return fn(in);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor3& t) {
    write_header(out, PayloadKind::kTensor);
    write_tensor_body(out, t);
}

Tensor3 read_tensor(std::istream& in) {
    read_header(in, PayloadKind::kTensor);
    return read_tensor_body(in);
}

void write_feature_map(std::ostream& out, const FeatureMap& f) {
    write_header(out, PayloadKind::kFeatureMap);
    put_i32(out, f.agent_id);
    put_i32(out, f.timestamp);
    put_f64(out, f.pose.x);
    put_f64(out, f.pose.y);
    put_f64(out, f.pose.yaw);
    put_f64(out, f.resolution);
    write_tensor_body(out, f.data);
}

FeatureMap read_feature_map(std::istream& in) {
    read_header(in, PayloadKind::kFeatureMap);
    FeatureMap f;
    f.agent_id = get_i32(in);
    f.timestamp = get_i32(in);
    f.pose.x = get_f64(in);
    f.pose.y = get_f64(in);
    f.pose.yaw = get_f64(in);
    f.resolution = get_f64(in);
    f.data = read_tensor_body(in);
    return f;
}

void write_proposals(std::ostream& out, const std::vector<ProposalBox>& boxes) {
    write_header(out, PayloadKind::kProposals);
    put_le(out, static_cast<std::uint64_t>(boxes.size()));
    for (const ProposalBox& b : boxes) {
        for (double v : {b.x, b.y, b.z, b.length, b.width, b.height, b.yaw, b.score}) put_f32(out, v);
        put_i32(out, b.anchor);
        put_i32(out, b.row);
        put_i32(out, b.col);
        put_i64(out, b.source_index);
    }
}

std::vector<ProposalBox> read_proposals(std::istream& in) {
    read_header(in, PayloadKind::kProposals);
    const std::uint64_t n = get_le<std::uint64_t>(in);
    if (n > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("proposal count out of range");
    std::vector<ProposalBox> boxes(static_cast<std::size_t>(n));
    for (ProposalBox& b : boxes) {
        for (double* v : {&b.x, &b.y, &b.z, &b.length, &b.width, &b.height, &b.yaw, &b.score}) *v = get_f32(in);
        b.anchor = get_i32(in);
        b.row = get_i32(in);
        b.col = get_i32(in);
        b.source_index = get_i64(in);
    }
    return boxes;
}

void save_tensor(const std::filesystem::path& path, const Tensor3& t) {
    with_output(path, [&](std::ostream& out) { write_tensor(out, t); });
}
Tensor3 load_tensor(const std::filesystem::path& path) {
    return with_input(path, [](std::istream& in) { return read_tensor(in); });
}
void save_feature_map(const std::filesystem::path& path, const FeatureMap& f) {
    with_output(path, [&](std::ostream& out) { write_feature_map(out, f); });
}
FeatureMap load_feature_map(const std::filesystem::path& path) {
    return with_input(path, [](std::istream& in) { return read_feature_map(in); });
}
void save_proposals(const std::filesystem::path& path, const std::vector<ProposalBox>& boxes) {
    with_output(path, [&](std::ostream& out) { write_proposals(out, boxes); });
}
std::vector<ProposalBox> load_proposals(const std::filesystem::path& path) {
    return with_input(path, [](std::istream& in) { return read_proposals(in); });
}

}  // namespace bevlat
