#include "densekit/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "densekit/bpe/tokenizer.hpp"
#include "densekit/nn/encoder.hpp"
#include "densekit/train/trainer.hpp"

namespace densekit::cli {

namespace {

enum class Kind { Bool, Int, Float, String, List };

struct Value {
  Kind kind = Kind::String;
  bool b = false;
  long long i = 0;
  double d = 0;
  std::string s;
  std::vector<std::string> list;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool looks_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::string parse_quoted(const std::string& text, std::size_t& i,
                         const std::string& where) {
  require(i < text.size() && text[i] == '"', where + ": expected '\"'");
  ++i;
  std::string out;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\\') {
      require(i + 1 < text.size(), where + ": dangling escape");
      char n = text[i + 1];
      require(n == '"' || n == '\\', where + ": unsupported escape \\" + n);
      out.push_back(n);
      i += 2;
      continue;
    }
    if (c == '"') {
      ++i;
      return out;
    }
    out.push_back(c);
    ++i;
  }
  throw ValidationError(where + ": unterminated string");
}

Value parse_value(const std::string& raw, const std::string& where) {
  const std::string text = trim(raw);
  require(!text.empty(), where + ": empty value");
  Value v;
  if (text == "true" || text == "false") {
    v.kind = Kind::Bool;
    v.b = (text == "true");
    return v;
  }
  if (text[0] == '"') {
    std::size_t i = 0;
    v.kind = Kind::String;
    v.s = parse_quoted(text, i, where);
    require(trim(text.substr(i)).empty(), where + ": trailing characters");
    return v;
  }
  if (text[0] == '[') {
    v.kind = Kind::List;
    std::size_t i = 1;
    bool expect_item = true;
    while (true) {
      while (i < text.size() &&
             (text[i] == ' ' || text[i] == '\t' || text[i] == ','))
        expect_item = expect_item || text[i] == ',', ++i;
      require(i < text.size(), where + ": unterminated list");
      if (text[i] == ']') {
        ++i;
        break;
      }
      require(text[i] == '"', where + ": list entries must be quoted strings");
      v.list.push_back(parse_quoted(text, i, where));
    }
    require(trim(text.substr(i)).empty(), where + ": trailing characters");
    return v;
  }
  if (looks_int(text)) {
    v.kind = Kind::Int;
    try {
      v.i = std::stoll(text);
    } catch (const std::exception&) {
      throw ValidationError(where + ": integer out of range: " + text);
    }
    return v;
  }
  {
    char* end = nullptr;
    const double d = std::strtod(text.c_str(), &end);
    if (end != nullptr && *end == '\0') {
      v.kind = Kind::Float;
      v.d = d;
      return v;
    }
  }
  throw ValidationError(where + ": unparseable value: " + text +
                        " (strings must be quoted)");
}

int as_int(const Value& v, const std::string& where) {
  require(v.kind == Kind::Int, where + ": expected an integer");
  require(v.i >= INT32_MIN && v.i <= INT32_MAX, where + ": integer out of range");
  return static_cast<int>(v.i);
}

std::uint64_t as_seed(const Value& v, const std::string& where) {
  require(v.kind == Kind::Int && v.i >= 0, where + ": expected a nonnegative integer");
  return static_cast<std::uint64_t>(v.i);
}

double as_float(const Value& v, const std::string& where) {
  if (v.kind == Kind::Int) return static_cast<double>(v.i);
  require(v.kind == Kind::Float, where + ": expected a number");
  return v.d;
}

bool as_bool(const Value& v, const std::string& where) {
  require(v.kind == Kind::Bool, where + ": expected true or false");
  return v.b;
}

std::string as_string(const Value& v, const std::string& where) {
  require(v.kind == Kind::String, where + ": expected a quoted string");
  return v.s;
}

std::vector<std::string> as_list(const Value& v, const std::string& where) {
  require(v.kind == Kind::List, where + ": expected a [\"...\"] list");
  return v.list;
}

struct RawEntry {
  std::string section;
  std::string key;
  std::string value_text;
  std::string where;
};

std::vector<RawEntry> tokenize(const std::string& text) {
  std::vector<RawEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "config:" + std::to_string(line_no);
    if (t[0] == '[') {
      require(t.back() == ']', where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      require(!section.empty(), where + ": empty section name");
      continue;
    }
    const auto eq = t.find('=');
    require(eq != std::string::npos, where + ": expected key = value");
    require(!section.empty(), where + ": key outside any section");
    RawEntry e;
    e.section = section;
    e.key = trim(t.substr(0, eq));
    e.value_text = trim(t.substr(eq + 1));
    e.where = where + " (" + section + "." + e.key + ")";
    require(!e.key.empty(), where + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

void apply_entry(RunConfig& cfg, const RawEntry& e) {
  const Value v = parse_value(e.value_text, e.where);
  const std::string& sec = e.section;
  const std::string& key = e.key;
  auto mark = [&] { cfg.explicit_keys.insert(sec + "." + key); };

  if (sec == "tokenizer") {
    if (key == "vocab_size") cfg.tokenizer.vocab_size = as_int(v, e.where);
    else if (key == "lowercase") cfg.tokenizer.lowercase = as_bool(v, e.where);
    else if (key == "special_tokens") cfg.tokenizer.special_tokens = as_list(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  if (sec == "encoder") {
    if (key == "num_layers") cfg.encoder.num_layers = as_int(v, e.where);
    else if (key == "num_heads") cfg.encoder.num_heads = as_int(v, e.where);
    else if (key == "model_dim") cfg.encoder.model_dim = as_int(v, e.where);
    else if (key == "ff_dim") cfg.encoder.ff_dim = as_int(v, e.where);
    else if (key == "max_seq_len") cfg.encoder.max_seq_len = as_int(v, e.where);
    else if (key == "pooling") cfg.encoder.pooling = as_string(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  if (sec == "train") {
    if (key == "objective") cfg.train.objective = as_string(v, e.where);
    else if (key == "stages") cfg.train.stages = as_list(v, e.where);
    else if (key == "batch_size") cfg.train.batch_size = as_int(v, e.where);
    else if (key == "steps") cfg.train.steps = as_int(v, e.where);
    else if (key == "lr") cfg.train.lr = as_float(v, e.where);
    else if (key == "distill_lr") cfg.train.distill_lr = as_float(v, e.where);
    else if (key == "tau") cfg.train.tau = as_float(v, e.where);
    else if (key == "tau_kd") cfg.train.tau_kd = as_float(v, e.where);
    else if (key == "seed") cfg.train.seed = as_seed(v, e.where);
    else if (key == "mask_prob") cfg.train.mask_prob = as_float(v, e.where);
    else if (key == "relation_weight") cfg.train.relation_weight = as_float(v, e.where);
    else if (key == "relation_heads") cfg.train.relation_heads = as_int(v, e.where);
    else if (key == "sources") cfg.train.sources = as_list(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  if (sec.rfind("train.", 0) == 0) {
    const std::string stage_name = sec.substr(6);
    require(!stage_name.empty(), e.where + ": empty stage name");
    auto it = std::find_if(cfg.train.stage_sections.begin(),
                           cfg.train.stage_sections.end(),
                           [&](const StageSection& s) { return s.name == stage_name; });
    if (it == cfg.train.stage_sections.end()) {
      StageSection s;
      s.name = stage_name;
      cfg.train.stage_sections.push_back(std::move(s));
      it = cfg.train.stage_sections.end() - 1;
    }
    if (key == "objective") it->objective = as_string(v, e.where);
    else if (key == "steps") it->steps = as_int(v, e.where);
    else if (key == "batch_size") it->batch_size = as_int(v, e.where);
    else if (key == "lr") it->lr = as_float(v, e.where);
    else if (key == "seed") it->seed = as_seed(v, e.where);
    else if (key == "sources") it->sources = as_list(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  if (sec == "retrieval") {
    if (key == "k") cfg.retrieval.k = as_int(v, e.where);
    else if (key == "workers") cfg.retrieval.workers = as_int(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  if (sec == "paths") {
    if (key == "corpus") cfg.paths.corpus = as_string(v, e.where);
    else if (key == "queries") cfg.paths.queries = as_string(v, e.where);
    else if (key == "qrels") cfg.paths.qrels = as_string(v, e.where);
    else if (key == "checkpoints") cfg.paths.checkpoints = as_string(v, e.where);
    else if (key == "reports") cfg.paths.reports = as_string(v, e.where);
    else throw ValidationError(e.where + ": unknown key");
    mark();
    return;
  }
  throw ValidationError(e.where + ": unknown section");
}

std::string env_name(const std::string& section, const std::string& key) {
  std::string name = "DENSEKIT_" + section + "_" + key;
  for (char& c : name) {
    if (c == '.') c = '_';
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

void apply_env_overrides(RunConfig& cfg) {
  // Every known (section, key) pair, including the file's stage sections.
  std::vector<std::pair<std::string, std::string>> known = {
      {"tokenizer", "vocab_size"}, {"tokenizer", "lowercase"},
      {"tokenizer", "special_tokens"},
      {"encoder", "num_layers"}, {"encoder", "num_heads"},
      {"encoder", "model_dim"}, {"encoder", "ff_dim"},
      {"encoder", "max_seq_len"}, {"encoder", "pooling"},
      {"train", "objective"}, {"train", "stages"}, {"train", "batch_size"},
      {"train", "steps"}, {"train", "lr"}, {"train", "distill_lr"},
      {"train", "tau"}, {"train", "tau_kd"}, {"train", "seed"},
      {"train", "mask_prob"}, {"train", "relation_weight"},
      {"train", "relation_heads"}, {"train", "sources"},
      {"retrieval", "k"}, {"retrieval", "workers"},
      {"paths", "corpus"}, {"paths", "queries"}, {"paths", "qrels"},
      {"paths", "checkpoints"}, {"paths", "reports"},
  };
  for (const auto& stage : cfg.train.stage_sections)
    for (const char* key :
         {"objective", "steps", "batch_size", "lr", "seed", "sources"})
      known.emplace_back("train." + stage.name, key);

  for (const auto& [section, key] : known) {
    const char* env = std::getenv(env_name(section, key).c_str());
    if (env == nullptr) continue;
    RawEntry e;
    e.section = section;
    e.key = key;
    e.value_text = env;
    e.where = "env " + env_name(section, key);
    apply_entry(cfg, e);
  }
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text, bool apply_env) {
  RunConfig cfg;
  for (const RawEntry& e : tokenize(text)) apply_entry(cfg, e);
  if (apply_env) apply_env_overrides(cfg);
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path, bool apply_env) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), apply_env);
}

void RunConfig::validate() const {
  // tokenizer
  bpe::SpecialTokens::from_list(tokenizer.special_tokens);
  require(tokenizer.vocab_size >=
              256 + static_cast<int>(tokenizer.special_tokens.size()),
          "tokenizer.vocab_size must be at least 256 + special token count");
  // encoder (vocab size is supplied by the tokenizer at build time)
  nn::EncoderConfig ec;
  ec.num_layers = encoder.num_layers;
  ec.num_heads = encoder.num_heads;
  ec.model_dim = encoder.model_dim;
  ec.ff_dim = encoder.ff_dim;
  ec.max_seq_len = encoder.max_seq_len;
  ec.vocab_size = tokenizer.vocab_size;
  ec.pooling = nn::pooling_from_name(encoder.pooling);
  ec.validate();
  // train
  train::objective_from_name(train.objective);
  require(train.batch_size >= 1, "train.batch_size must be >= 1");
  require(train.steps >= 0, "train.steps must be >= 0");
  require(train.lr > 0, "train.lr must be positive");
  require(train.distill_lr > 0, "train.distill_lr must be positive");
  require(train.tau > 0, "train.tau must be positive");
  require(train.tau_kd > 0, "train.tau_kd must be positive");
  require(train.mask_prob >= 0 && train.mask_prob <= 1,
          "train.mask_prob must lie in [0,1]");
  require(train.relation_weight >= 0, "train.relation_weight must be >= 0");
  require(train.relation_heads >= 0, "train.relation_heads must be >= 0");
  for (const auto& src : train.sources)
    require(src.find('=') != std::string::npos,
            "train.sources entries must look like \"name=path\": " + src);
  for (const auto& s : train.stage_sections) {
    const bool listed = std::find(train.stages.begin(), train.stages.end(),
                                  s.name) != train.stages.end();
    require(listed, "stage section [train." + s.name +
                        "] is not listed in train.stages");
    if (!s.objective.empty()) train::objective_from_name(s.objective);
    require(s.steps >= 0, "stage steps must be >= 0");
    require(s.batch_size >= 0, "stage batch_size must be >= 0");
    require(s.lr >= 0, "stage lr must be >= 0");
  }
  for (const auto& name : train.stages) {
    (void)name;
  }
  // retrieval
  require(retrieval.k >= 1, "retrieval.k must be >= 1");
  require(retrieval.workers >= 1, "retrieval.workers must be >= 1");
}

nlohmann::json RunConfig::echo() const {
  nlohmann::json j;
  j["tokenizer"] = {{"vocab_size", tokenizer.vocab_size},
                    {"lowercase", tokenizer.lowercase},
                    {"special_tokens", tokenizer.special_tokens}};
  j["encoder"] = {{"num_layers", encoder.num_layers},
                  {"num_heads", encoder.num_heads},
                  {"model_dim", encoder.model_dim},
                  {"ff_dim", encoder.ff_dim},
                  {"max_seq_len", encoder.max_seq_len},
                  {"pooling", encoder.pooling}};
  nlohmann::json t;
  t["objective"] = train.objective;
  t["stages"] = train.stages;
  t["batch_size"] = train.batch_size;
  t["steps"] = train.steps;
  t["lr"] = train.lr;
  t["distill_lr"] = train.distill_lr;
  t["tau"] = train.tau;
  t["tau_kd"] = train.tau_kd;
  t["seed"] = train.seed;
  t["mask_prob"] = train.mask_prob;
  t["relation_weight"] = train.relation_weight;
  t["relation_heads"] = train.relation_heads;
  t["sources"] = train.sources;
  for (const auto& s : train.stage_sections) {
    nlohmann::json sj;
    if (!s.objective.empty()) sj["objective"] = s.objective;
    if (s.steps > 0) sj["steps"] = s.steps;
    if (s.batch_size > 0) sj["batch_size"] = s.batch_size;
    if (s.lr > 0) sj["lr"] = s.lr;
    sj["seed"] = s.seed;
    if (!s.sources.empty()) sj["sources"] = s.sources;
    t["stage." + s.name] = std::move(sj);
  }
  j["train"] = std::move(t);
  j["retrieval"] = {{"k", retrieval.k}, {"workers", retrieval.workers}};
  j["paths"] = {{"corpus", paths.corpus},
                {"queries", paths.queries},
                {"qrels", paths.qrels},
                {"checkpoints", paths.checkpoints},
                {"reports", paths.reports}};
  return j;
}

}  // namespace densekit::cli
