#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "laker/tensor.hpp"

namespace laker {

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

struct CheckpointMeta {
  std::string config_snapshot;      // canonical config text of the producing run
  std::string vocab_hash;           // fnv1a64 of the vocab file content
  std::string concept_vocab_hash;   // fnv1a64 of the concept vocab file content
  std::string created_at;           // ISO-8601 UTC
};

struct TensorSection {
  std::string name;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

// Container: u64 little-endian header length, UTF-8 JSON header, then all
// tensor payloads as row-major little-endian float32. The header records a
// hash of the payload bytes and is verified on load.
std::string checkpoint_to_string(const CheckpointMeta& meta,
                                 const std::vector<TensorSection>& sections);
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<TensorSection>& sections);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::map<std::string, std::vector<std::pair<std::string, Tensor>>> sections;

  const std::vector<std::pair<std::string, Tensor>>& section(const std::string& name) const;
};

LoadedCheckpoint checkpoint_from_string(const std::string& blob, const std::string& source_name);
LoadedCheckpoint load_checkpoint(const std::string& path);

// Fails with ValidationError when the checkpoint was produced against
// different vocabulary files.
void verify_vocab_hashes(const CheckpointMeta& meta, const std::string& vocab_text,
                         const std::string& concept_vocab_text);

std::string iso8601_utc_now();

}  // namespace laker
