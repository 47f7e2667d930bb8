#include "laker/checkpoint.hpp"

#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace laker {

namespace {

using nlohmann::ordered_json;

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const std::string& blob, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
  }
  return v;
}

void append_f32_le(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float read_f32_le(const std::string& blob, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
  }
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string checkpoint_to_string(const CheckpointMeta& meta,
                                 const std::vector<TensorSection>& sections) {
  std::string payload;
  ordered_json jsections = ordered_json::array();
  std::size_t offset = 0;  // in float32 units
  for (const auto& sec : sections) {
    ordered_json jtensors = ordered_json::array();
    for (const auto& [name, t] : sec.tensors) {
      ordered_json jt;
      jt["name"] = name;
      jt["shape"] = t.shape();
      jt["offset"] = offset;
      jt["count"] = t.numel();
      jtensors.push_back(jt);
      for (double v : t.values()) append_f32_le(payload, static_cast<float>(v));
      offset += t.numel();
    }
    jsections.push_back({{"name", sec.name}, {"tensors", jtensors}});
  }

  ordered_json header;
  header["schema"] = 1;
  header["created_at"] = meta.created_at;
  header["config_snapshot"] = meta.config_snapshot;
  header["vocab_hash"] = meta.vocab_hash;
  header["concept_vocab_hash"] = meta.concept_vocab_hash;
  header["payload_hash"] = fnv1a64_hex(payload);
  header["sections"] = jsections;

  std::string header_text = header.dump();
  std::string blob;
  append_u64_le(blob, header_text.size());
  blob += header_text;
  blob += payload;
  return blob;
}

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<TensorSection>& sections) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << checkpoint_to_string(meta, sections);
}

const std::vector<std::pair<std::string, Tensor>>& LoadedCheckpoint::section(
    const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) {
    throw Error(ErrorKind::ValidationError, "checkpoint has no section '" + name + "'");
  }
  return it->second;
}

LoadedCheckpoint checkpoint_from_string(const std::string& blob, const std::string& source_name) {
  if (blob.size() < 8) {
    throw Error(ErrorKind::ParseError, source_name + ": truncated checkpoint");
  }
  std::uint64_t header_len = read_u64_le(blob, 0);
  if (8 + header_len > blob.size()) {
    throw Error(ErrorKind::ParseError, source_name + ": header length exceeds file size");
  }
  ordered_json header;
  try {
    header = ordered_json::parse(blob.substr(8, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ": bad checkpoint header: " + e.what());
  }
  if (header.value("schema", 0) != 1) {
    throw Error(ErrorKind::ParseError, source_name + ": unsupported checkpoint schema");
  }

  std::string payload = blob.substr(8 + header_len);
  std::string expect = header.value("payload_hash", "");
  if (fnv1a64_hex(payload) != expect) {
    throw Error(ErrorKind::ValidationError, source_name + ": payload hash mismatch");
  }

  LoadedCheckpoint out;
  out.meta.created_at = header.value("created_at", "");
  out.meta.config_snapshot = header.value("config_snapshot", "");
  out.meta.vocab_hash = header.value("vocab_hash", "");
  out.meta.concept_vocab_hash = header.value("concept_vocab_hash", "");

  for (const auto& jsec : header["sections"]) {
    std::string sec_name = jsec.at("name").get<std::string>();
    auto& tensors = out.sections[sec_name];
    for (const auto& jt : jsec.at("tensors")) {
      std::string name = jt.at("name").get<std::string>();
      std::vector<std::size_t> shape = jt.at("shape").get<std::vector<std::size_t>>();
      std::size_t offset = jt.at("offset").get<std::size_t>();
      std::size_t count = jt.at("count").get<std::size_t>();
      if ((offset + count) * 4 > payload.size()) {
        throw Error(ErrorKind::ParseError, source_name + ": tensor '" + name + "' out of bounds");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        values[i] = static_cast<double>(read_f32_le(payload, (offset + i) * 4));
      }
      tensors.emplace_back(name, Tensor::from(shape, std::move(values)));
    }
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str(), path);
}

void verify_vocab_hashes(const CheckpointMeta& meta, const std::string& vocab_text,
                         const std::string& concept_vocab_text) {
  if (meta.vocab_hash != fnv1a64_hex(vocab_text)) {
    throw Error(ErrorKind::ValidationError, "vocab hash does not match the checkpoint");
  }
  if (meta.concept_vocab_hash != fnv1a64_hex(concept_vocab_text)) {
    throw Error(ErrorKind::ValidationError, "concept vocab hash does not match the checkpoint");
  }
}

}  // namespace laker
