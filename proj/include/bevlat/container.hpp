#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bevlat/pipeline.hpp"

namespace bevlat {

// Binary container: 4-byte magic "BVLT", u32 version, u32 payload kind, then
// the payload. Integers and floats are little-endian; tensor values are
// stored as 32-bit floats, so a round trip is exact only to float precision.
inline constexpr std::uint32_t kContainerVersion = 1;

enum class PayloadKind : std::uint32_t { kTensor = 1, kFeatureMap = 2, kProposals = 3 };

void write_tensor(std::ostream& out, const Tensor3& t);
Tensor3 read_tensor(std::istream& in);

void write_feature_map(std::ostream& out, const FeatureMap& f);
FeatureMap read_feature_map(std::istream& in);

void write_proposals(std::ostream& out, const std::vector<ProposalBox>& boxes);
std::vector<ProposalBox> read_proposals(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor3& t);
Tensor3 load_tensor(const std::filesystem::path& path);
void save_feature_map(const std::filesystem::path& path, const FeatureMap& f);
FeatureMap load_feature_map(const std::filesystem::path& path);
void save_proposals(const std::filesystem::path& path, const std::vector<ProposalBox>& boxes);
std::vector<ProposalBox> load_proposals(const std::filesystem::path& path);

}  // namespace bevlat
