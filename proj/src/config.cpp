#include "laker/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace laker {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& where, const std::string& key,
                            const std::string& value) {
  throw Error(ErrorKind::ConfigError, where + ": bad value '" + value + "' for key '" + key + "'");
}

std::uint64_t to_u64(const std::string& where, const std::string& key, const std::string& v) {
  std::uint64_t out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(where, key, v);
  return out;
}

std::size_t to_size(const std::string& where, const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(where, key, v));
}

double to_double(const std::string& where, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) bad_value(where, key, v);
    return out;
  } catch (const std::exception&) {
    bad_value(where, key, v);
  }
}

bool to_bool(const std::string& where, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(where, key, v);
}

}  // namespace

void RunConfig::validate() const {
  corpus.validate();
  encoder.validate();
  train.validate();
  transe.validate();
  if (match.k < 1) throw Error(ErrorKind::ConfigError, "match.k must be >= 1");
  if (train.max_len_path > encoder.max_positions || train.max_len_triplet > encoder.max_positions) {
    throw Error(ErrorKind::ConfigError, "sequence limits exceed encoder max_positions");
  }
}

void apply_objectives(TrainConfig& train, const std::string& list) {
  bool c2c = false, c2r = false, cpath = false, mpath = false;
  std::istringstream in(list);
  std::string item;
  bool any = false;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    any = true;
    if (item == "c2c") c2c = true;
    else if (item == "c2r") c2r = true;
    else if (item == "cpath") cpath = true;
    else if (item == "mpath") mpath = true;
    else if (item == "all") c2c = c2r = cpath = mpath = true;
    else throw Error(ErrorKind::ConfigError, "unknown objective '" + item + "'");
  }
  if (!any) throw Error(ErrorKind::ConfigError, "objectives list is empty");
  train.use_c2c = c2c;
  train.use_c2r = c2r;
  train.use_cpath = cpath;
  train.use_mpath = mpath;
}

std::string objectives_string(const TrainConfig& train) {
  std::string out;
  auto push = [&](const char* name, bool on) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  push("c2c", train.use_c2c);
  push("c2r", train.use_c2r);
  push("cpath", train.use_cpath);
  push("mpath", train.use_mpath);
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    std::string where = source_name + ":" + std::to_string(lineno);
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorKind::ConfigError, where + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      static const char* known[] = {"run",   "extract", "corpus", "vocab",
                                    "encoder", "train",   "transe", "match"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw Error(ErrorKind::ConfigError, where + ": unknown section [" + section + "]");
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, where + ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ConfigError, where + ": empty key");

    auto unknown = [&]() -> void {
      throw Error(ErrorKind::ConfigError,
                  where + ": unknown key '" + key + "' in section [" + section + "]");
    };

    if (section == "run") {
      if (key == "seed") cfg.seed = to_u64(where, key, value);
      else if (key == "threads") cfg.threads = to_size(where, key, value);
      else unknown();
    } else if (section == "extract") {
      if (key == "max_len") cfg.corpus.path.max_len = to_size(where, key, value);
      else if (key == "max_per_concept") cfg.corpus.path.max_per_concept = to_size(where, key, value);
      else if (key == "p_syn") cfg.corpus.path.p_syn = to_double(where, key, value);
      else unknown();
    } else if (section == "corpus") {
      if (key == "neg_per_pos") cfg.corpus.neg_per_pos = to_size(where, key, value);
      else if (key == "syn_candidate_pool") cfg.corpus.syn_candidate_pool = to_size(where, key, value);
      else if (key == "mask_count_path") cfg.corpus.mask_count_path = to_size(where, key, value);
      else if (key == "short_path_threshold") cfg.corpus.short_path_threshold = to_size(where, key, value);
      else if (key == "long_path_replace_frac") cfg.corpus.long_path_replace_frac = to_double(where, key, value);
      else unknown();
    } else if (section == "vocab") {
      if (key == "min_freq") cfg.vocab_min_freq = to_size(where, key, value);
      else if (key == "max_len_triplet") cfg.train.max_len_triplet = to_size(where, key, value);
      else if (key == "max_len_path") cfg.train.max_len_path = to_size(where, key, value);
      else unknown();
    } else if (section == "encoder") {
      if (key == "layers") cfg.encoder.layers = to_size(where, key, value);
      else if (key == "heads") cfg.encoder.heads = to_size(where, key, value);
      else if (key == "d_model") cfg.encoder.d_model = to_size(where, key, value);
      else if (key == "ffn") cfg.encoder.ffn = to_size(where, key, value);
      else if (key == "max_positions") cfg.encoder.max_positions = to_size(where, key, value);
      else if (key == "dropout") cfg.encoder.dropout = to_double(where, key, value);
      else unknown();
    } else if (section == "train") {
      if (key == "epochs") cfg.train.epochs = to_size(where, key, value);
      else if (key == "steps") cfg.train.steps = to_size(where, key, value);
      else if (key == "batch_size") cfg.train.batch_size = to_size(where, key, value);
      else if (key == "lr") cfg.train.lr = to_double(where, key, value);
      else if (key == "tau") cfg.train.tau = to_double(where, key, value);
      else if (key == "objectives") apply_objectives(cfg.train, value);
      else if (key == "w_c2c") cfg.train.w_c2c = to_double(where, key, value);
      else if (key == "w_c2r") cfg.train.w_c2r = to_double(where, key, value);
      else if (key == "w_cpath") cfg.train.w_cpath = to_double(where, key, value);
      else if (key == "w_mpath") cfg.train.w_mpath = to_double(where, key, value);
      else unknown();
    } else if (section == "transe") {
      if (key == "dim") cfg.transe.dim = to_size(where, key, value);
      else if (key == "margin") cfg.transe.margin = to_double(where, key, value);
      else if (key == "lr") cfg.transe.lr = to_double(where, key, value);
      else if (key == "epochs") cfg.transe.epochs = to_size(where, key, value);
      else if (key == "neg_per_pos") cfg.transe.neg_per_pos = to_size(where, key, value);
      else unknown();
    } else if (section == "match") {
      if (key == "k") cfg.match.k = to_size(where, key, value);
      else if (key == "threshold") cfg.match.threshold = to_double(where, key, value);
      else if (key == "one_to_one") cfg.match.one_to_one = to_bool(where, key, value);
      else unknown();
    } else {
      throw Error(ErrorKind::ConfigError, where + ": key '" + key + "' outside any section");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path);
}

std::string dump_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "[run]\n"
      << "seed = " << cfg.seed << "\n"
      << "threads = " << cfg.threads << "\n\n";
  out << "[extract]\n"
      << "max_len = " << cfg.corpus.path.max_len << "\n"
      << "max_per_concept = " << cfg.corpus.path.max_per_concept << "\n"
      << "p_syn = " << cfg.corpus.path.p_syn << "\n\n";
  out << "[corpus]\n"
      << "neg_per_pos = " << cfg.corpus.neg_per_pos << "\n"
      << "syn_candidate_pool = " << cfg.corpus.syn_candidate_pool << "\n"
      << "mask_count_path = " << cfg.corpus.mask_count_path << "\n"
      << "short_path_threshold = " << cfg.corpus.short_path_threshold << "\n"
      << "long_path_replace_frac = " << cfg.corpus.long_path_replace_frac << "\n\n";
  out << "[vocab]\n"
      << "min_freq = " << cfg.vocab_min_freq << "\n"
      << "max_len_triplet = " << cfg.train.max_len_triplet << "\n"
      << "max_len_path = " << cfg.train.max_len_path << "\n\n";
  out << "[encoder]\n"
      << "layers = " << cfg.encoder.layers << "\n"
      << "heads = " << cfg.encoder.heads << "\n"
      << "d_model = " << cfg.encoder.d_model << "\n"
      << "ffn = " << cfg.encoder.ffn << "\n"
      << "max_positions = " << cfg.encoder.max_positions << "\n"
      << "dropout = " << cfg.encoder.dropout << "\n\n";
  out << "[train]\n"
      << "epochs = " << cfg.train.epochs << "\n"
      << "steps = " << cfg.train.steps << "\n"
      << "batch_size = " << cfg.train.batch_size << "\n"
      << "lr = " << cfg.train.lr << "\n"
      << "tau = " << cfg.train.tau << "\n"
      << "objectives = " << objectives_string(cfg.train) << "\n"
      << "w_c2c = " << cfg.train.w_c2c << "\n"
      << "w_c2r = " << cfg.train.w_c2r << "\n"
      << "w_cpath = " << cfg.train.w_cpath << "\n"
      << "w_mpath = " << cfg.train.w_mpath << "\n\n";
  out << "[transe]\n"
      << "dim = " << cfg.transe.dim << "\n"
      << "margin = " << cfg.transe.margin << "\n"
      << "lr = " << cfg.transe.lr << "\n"
      << "epochs = " << cfg.transe.epochs << "\n"
      << "neg_per_pos = " << cfg.transe.neg_per_pos << "\n\n";
  out << "[match]\n"
      << "k = " << cfg.match.k << "\n"
      << "threshold = " << cfg.match.threshold << "\n"
      << "one_to_one = " << (cfg.match.one_to_one ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace laker
