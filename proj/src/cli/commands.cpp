#include "densekit/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "densekit/bpe/analysis.hpp"
#include "densekit/bpe/tokenizer.hpp"
#include "densekit/cli/config.hpp"
#include "densekit/cli/manifest.hpp"
#include "densekit/evalkit/metrics.hpp"
#include "densekit/nn/checkpoint.hpp"
#include "densekit/retrieval/io.hpp"
#include "densekit/retrieval/timed.hpp"
#include "densekit/train/trainer.hpp"
#include "json.hpp"

namespace densekit::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

RunConfig load_config(const std::string& config_path) {
  RunConfig cfg = config_path.empty() ? RunConfig::from_text("", /*apply_env=*/true)
                                      : RunConfig::from_file(config_path);
  return cfg;
}

/// Tokenizer corpora: one document per line, or JSON Lines with "text".
std::vector<std::string> read_documents(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open input file: " + path);
  std::vector<std::string> docs;
  std::string line;
  std::size_t line_no = 0;
  const bool jsonl = path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (jsonl) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": invalid JSON: " + e.what());
      }
      require(j.contains("text"),
              path + ":" + std::to_string(line_no) + ": missing \"text\" field");
      docs.push_back(j.at("text").get<std::string>());
    } else {
      docs.push_back(line);
    }
  }
  return docs;
}

std::vector<train::DataSource> make_sources(const std::vector<std::string>& specs) {
  require(!specs.empty(),
          "no training sources configured (train.sources = [\"name=path\", ...])");
  std::vector<train::DataSource> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    require(eq != std::string::npos && eq > 0,
            "source spec must look like name=path: " + spec);
    out.push_back(train::DataSource::from_file(spec.substr(0, eq),
                                               spec.substr(eq + 1)));
  }
  return out;
}

nn::EncoderConfig encoder_config_of(const RunConfig& cfg, int vocab_size) {
  nn::EncoderConfig ec;
  ec.num_layers = cfg.encoder.num_layers;
  ec.num_heads = cfg.encoder.num_heads;
  ec.model_dim = cfg.encoder.model_dim;
  ec.ff_dim = cfg.encoder.ff_dim;
  ec.max_seq_len = cfg.encoder.max_seq_len;
  ec.vocab_size = vocab_size;
  ec.pooling = nn::pooling_from_name(cfg.encoder.pooling);
  ec.validate();
  return ec;
}

train::StagePlan plan_of(const RunConfig& cfg, train::Objective forced,
                         bool force_objective) {
  train::StagePlan plan;
  plan.tau = cfg.train.tau;
  plan.kd.tau_kd = cfg.train.tau_kd;
  plan.kd.sim_tau = cfg.train.tau;
  plan.relation_weight = cfg.train.relation_weight;
  plan.relation_heads = cfg.train.relation_heads;
  plan.mask_prob = cfg.train.mask_prob;
  if (cfg.train.stages.empty()) {
    train::Stage s;
    s.name = "main";
    s.steps = cfg.train.steps;
    s.batch_size = cfg.train.batch_size;
    s.lr = cfg.train.lr;
    s.seed = cfg.train.seed;
    s.objective = force_objective
                      ? forced
                      : train::objective_from_name(cfg.train.objective);
    plan.stages.push_back(std::move(s));
    return plan;
  }
  for (std::size_t i = 0; i < cfg.train.stages.size(); ++i) {
    const std::string& name = cfg.train.stages[i];
    const StageSection* sec = nullptr;
    for (const auto& s : cfg.train.stage_sections)
      if (s.name == name) sec = &s;
    train::Stage s;
    s.name = name;
    s.steps = (sec && sec->steps > 0) ? sec->steps : cfg.train.steps;
    s.batch_size = (sec && sec->batch_size > 0) ? sec->batch_size : cfg.train.batch_size;
    s.lr = (sec && sec->lr > 0) ? sec->lr : cfg.train.lr;
    s.seed = (sec && sec->seed != 0) ? sec->seed : Rng::derive(cfg.train.seed, i);
    s.objective = force_objective ? forced
                  : (sec && !sec->objective.empty())
                      ? train::objective_from_name(sec->objective)
                      : train::objective_from_name(cfg.train.objective);
    if (sec) s.source_names = sec->sources;
    plan.stages.push_back(std::move(s));
  }
  return plan;
}

void emit(const std::string& report) { std::cout << report; }

std::string default_tokenizer_path(const RunConfig& cfg) {
  return (fs::path(cfg.paths.checkpoints) / "tokenizer.json").string();
}

void ensure_parent_dir(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Training log file helper: opens lazily, stderr notes progress.
class LogFile {
 public:
  explicit LogFile(const std::string& path) : path_(path) {
    if (path_.empty()) return;
    ensure_parent_dir(path_);
    out_.open(path_, std::ios::binary);
    require(out_.good(), "cannot open log file: " + path_);
  }
  std::ostream* stream() { return path_.empty() ? nullptr : &out_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Index file: magic + u64 header length + JSON header + row-major float64
// payload, one row per document.
// ---------------------------------------------------------------------------

constexpr char kIndexMagic[8] = {'D', 'K', 'I', 'N', 'D', 'E', 'X', '1'};

void write_index_file(const std::string& path, const std::vector<std::string>& ids,
                      const Matrix& rows) {
  ensure_parent_dir(path);
  json header;
  header["version"] = 1;
  header["dim"] = rows.cols();
  header["count"] = rows.rows();
  header["ids"] = ids;
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open index file for writing: " + path);
  out.write(kIndexMagic, 8);
  const std::uint64_t hlen = text.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    RowVector r = rows.row(i);
    out.write(reinterpret_cast<const char*>(r.data()),
              static_cast<std::streamsize>(sizeof(Scalar) *
                                           static_cast<std::size_t>(r.size())));
  }
  require(out.good(), "failed writing index file: " + path);
}

retrieval::Index read_index_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open index file: " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kIndexMagic, 8) == 0,
          "not an index file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  require(in.good() && hlen > 0 && hlen < (1ULL << 30), "corrupt index header");
  std::string text(hlen, '\0');
  in.read(text.data(), static_cast<std::streamsize>(hlen));
  require(in.good(), "truncated index header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corrupt index header: ") + e.what());
  }
  const int dim = header.at("dim").get<int>();
  const auto ids = header.at("ids").get<std::vector<std::string>>();
  retrieval::Index index(dim);
  RowVector row(dim);
  for (const auto& id : ids) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(Scalar) *
                                         static_cast<std::size_t>(dim)));
    require(in.good(), "truncated index payload at doc: " + id);
    index.add(id, row);
  }
  return index;
}

Matrix encode_corpus(const nn::Checkpoint& ck, const bpe::TokenizerModel& tok,
                     const std::vector<retrieval::CorpusDoc>& corpus) {
  Matrix rows(static_cast<Eigen::Index>(corpus.size()), ck.config.model_dim);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& d = corpus[i];
    const std::string text =
        d.title.empty() ? d.text : (d.text.empty() ? d.title : d.title + " " + d.text);
    rows.row(static_cast<Eigen::Index>(i)) =
        retrieval::embed_text(ck.config, ck.params, tok, text);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string config_path;
};

int cmd_train_tokenizer(const CommonOpts& common, std::string input,
                        std::string output, int vocab_size_flag,
                        int lowercase_flag) {
  RunConfig cfg = load_config(common.config_path);
  if (vocab_size_flag > 0) cfg.tokenizer.vocab_size = vocab_size_flag;
  if (lowercase_flag >= 0) cfg.tokenizer.lowercase = lowercase_flag != 0;
  cfg.validate();
  if (input.empty()) input = cfg.paths.corpus;
  require(!input.empty(), "no input corpus (flag --input or paths.corpus)");
  if (output.empty()) output = default_tokenizer_path(cfg);

  const auto docs = read_documents(input);
  auto model = bpe::train_bpe(docs, cfg.tokenizer.vocab_size, cfg.tokenizer.lowercase,
                              bpe::SpecialTokens::from_list(cfg.tokenizer.special_tokens));
  ensure_parent_dir(output);
  model.save(output);

  Manifest manifest("train-tokenizer", cfg.echo(), cfg.train.seed);
  manifest.add_input(input);
  manifest.add_output(output);
  manifest.set_note("vocab_size", model.vocab_size());
  manifest.set_note("merges", model.merges().size());
  manifest.write(cfg.paths.reports);

  json summary;
  summary["output"] = output;
  summary["vocab_size"] = model.vocab_size();
  summary["merges"] = model.merges().size();
  emit(summary.dump(2) + "\n");
  return 0;
}

int cmd_analyze_vocab(const CommonOpts& common, const std::string& a_path,
                      const std::string& b_path, const std::string& format) {
  RunConfig cfg = load_config(common.config_path);
  auto a = bpe::TokenizerModel::load(a_path);
  auto b = bpe::TokenizerModel::load(b_path);
  auto report = bpe::vocab_overlap(a, b);
  emit(format == "table" ? report.to_table() : report.to_json());

  Manifest manifest("analyze-vocab", cfg.echo(), cfg.train.seed);
  manifest.add_input(a_path);
  manifest.add_input(b_path);
  manifest.write(cfg.paths.reports);
  return 0;
}

int cmd_token_stats(const CommonOpts& common,
                    const std::vector<std::string>& model_specs,
                    const std::string& samples_path, const std::string& format) {
  RunConfig cfg = load_config(common.config_path);
  require(!model_specs.empty(), "at least one --model NAME=PATH required");
  std::vector<bpe::TokenizerModel> models;
  std::vector<std::pair<std::string, const bpe::TokenizerModel*>> named;
  std::vector<std::string> paths;
  models.reserve(model_specs.size());
  for (const auto& spec : model_specs) {
    const auto eq = spec.find('=');
    require(eq != std::string::npos && eq > 0,
            "--model must look like NAME=PATH: " + spec);
    models.push_back(bpe::TokenizerModel::load(spec.substr(eq + 1)));
    paths.push_back(spec.substr(eq + 1));
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto eq = model_specs[i].find('=');
    named.emplace_back(model_specs[i].substr(0, eq), &models[i]);
  }
  const auto samples = read_documents(samples_path);
  auto report = bpe::corpus_token_stats(named, samples);
  emit(format == "table" ? report.to_table() : report.to_json());

  Manifest manifest("token-stats", cfg.echo(), cfg.train.seed);
  for (const auto& p : paths) manifest.add_input(p);
  manifest.add_input(samples_path);
  manifest.write(cfg.paths.reports);
  return 0;
}

int run_training_command(const std::string& name, const CommonOpts& common,
                         std::string tokenizer_path, std::string output,
                         std::string log_path, const std::string& teacher_path,
                         bool force_mlm) {
  RunConfig cfg = load_config(common.config_path);
  cfg.validate();
  if (tokenizer_path.empty()) tokenizer_path = default_tokenizer_path(cfg);
  if (output.empty())
    output = (fs::path(cfg.paths.checkpoints) / (name + ".ckpt")).string();
  if (log_path.empty())
    log_path = (fs::path(cfg.paths.reports) / (name + "-log.jsonl")).string();

  auto tokenizer = bpe::TokenizerModel::load(tokenizer_path);
  auto sources = make_sources(cfg.train.sources);
  nn::EncoderConfig ec = encoder_config_of(cfg, tokenizer.vocab_size());
  nn::ParameterSet params = nn::init_parameters(ec, cfg.train.seed);

  std::optional<nn::Checkpoint> teacher;
  if (!teacher_path.empty()) teacher = nn::load_checkpoint(teacher_path);

  auto plan = plan_of(cfg, train::Objective::Mlm, force_mlm);
  LogFile log(log_path);
  auto result = train::train_embedder(plan, ec, std::move(params), sources,
                                      tokenizer,
                                      teacher ? &*teacher : nullptr, log.stream());
  ensure_parent_dir(output);
  nn::save_checkpoint(output, ec, result.params);

  Manifest manifest(name, cfg.echo(), cfg.train.seed);
  manifest.add_input(tokenizer_path);
  if (!teacher_path.empty()) manifest.add_input(teacher_path);
  for (const auto& spec : cfg.train.sources)
    manifest.add_input(spec.substr(spec.find('=') + 1));
  manifest.add_output(output);
  if (log.stream()) manifest.add_output(log.path());
  manifest.set_note("final_loss", result.log.empty() ? 0.0 : result.log.back().value);
  manifest.set_note("steps_run", result.log.size());
  manifest.write(cfg.paths.reports);

  json summary;
  summary["checkpoint"] = output;
  summary["steps"] = result.log.size();
  if (!result.log.empty()) summary["final_loss"] = result.log.back().value;
  emit(summary.dump(2) + "\n");
  return 0;
}

int cmd_distill(const CommonOpts& common, std::string tokenizer_path,
                const std::string& teacher_path, std::string output,
                std::string log_path) {
  RunConfig cfg = load_config(common.config_path);
  cfg.validate();
  require(!teacher_path.empty(), "--teacher checkpoint is required");
  if (tokenizer_path.empty()) tokenizer_path = default_tokenizer_path(cfg);
  if (output.empty())
    output = (fs::path(cfg.paths.checkpoints) / "student.ckpt").string();
  if (log_path.empty())
    log_path = (fs::path(cfg.paths.reports) / "distill-log.jsonl").string();

  auto tokenizer = bpe::TokenizerModel::load(tokenizer_path);
  auto teacher = nn::load_checkpoint(teacher_path);
  auto sources = make_sources(cfg.train.sources);
  nn::EncoderConfig sc = encoder_config_of(cfg, tokenizer.vocab_size());
  nn::ParameterSet init = nn::init_parameters(sc, cfg.train.seed);

  objectives::KDConfig kd;
  kd.tau_kd = cfg.train.tau_kd;
  kd.sim_tau = cfg.train.tau;
  LogFile log(log_path);
  auto result = train::distill_embedder(
      teacher, sc, std::move(init), sources, tokenizer, kd, cfg.train.steps,
      cfg.train.batch_size, cfg.train.distill_lr, cfg.train.seed,
      cfg.train.relation_weight, cfg.train.relation_heads, log.stream());
  ensure_parent_dir(output);
  nn::save_checkpoint(output, sc, result.params);

  Manifest manifest("distill", cfg.echo(), cfg.train.seed);
  manifest.add_input(tokenizer_path);
  manifest.add_input(teacher_path);
  for (const auto& spec : cfg.train.sources)
    manifest.add_input(spec.substr(spec.find('=') + 1));
  manifest.add_output(output);
  if (log.stream()) manifest.add_output(log.path());
  manifest.write(cfg.paths.reports);

  json summary;
  summary["checkpoint"] = output;
  summary["steps"] = result.log.size();
  if (!result.log.empty()) summary["final_loss"] = result.log.back().value;
  emit(summary.dump(2) + "\n");
  return 0;
}

int cmd_index(const CommonOpts& common, const std::string& checkpoint_path,
              std::string tokenizer_path, std::string corpus_path,
              std::string output) {
  RunConfig cfg = load_config(common.config_path);
  if (tokenizer_path.empty()) tokenizer_path = default_tokenizer_path(cfg);
  if (corpus_path.empty()) corpus_path = cfg.paths.corpus;
  require(!corpus_path.empty(), "no corpus (flag --corpus or paths.corpus)");
  if (output.empty()) output = "index.dki";

  auto tokenizer = bpe::TokenizerModel::load(tokenizer_path);
  auto ck = nn::load_checkpoint(checkpoint_path);
  auto corpus = retrieval::read_corpus_jsonl(corpus_path);
  Matrix rows = encode_corpus(ck, tokenizer, corpus);
  std::vector<std::string> ids;
  for (const auto& d : corpus) ids.push_back(d.id);
  // Normalize here so the stored index is search-ready.
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Scalar n = rows.row(i).norm();
    require(n > 0, "zero embedding for doc " + ids[static_cast<std::size_t>(i)]);
    rows.row(i) /= n;
  }
  write_index_file(output, ids, rows);

  Manifest manifest("index", cfg.echo(), cfg.train.seed);
  manifest.add_input(checkpoint_path);
  manifest.add_input(tokenizer_path);
  manifest.add_input(corpus_path);
  manifest.add_output(output);
  manifest.write(cfg.paths.reports);

  json summary;
  summary["output"] = output;
  summary["documents"] = ids.size();
  summary["dim"] = ck.config.model_dim;
  emit(summary.dump(2) + "\n");
  return 0;
}

int cmd_search(const CommonOpts& common, const std::string& checkpoint_path,
               std::string tokenizer_path, const std::string& index_path,
               std::string corpus_path, std::string queries_path,
               std::string output, int k_flag, int workers_flag) {
  RunConfig cfg = load_config(common.config_path);
  if (k_flag > 0) cfg.retrieval.k = k_flag;
  if (workers_flag > 0) cfg.retrieval.workers = workers_flag;
  cfg.validate();
  if (tokenizer_path.empty()) tokenizer_path = default_tokenizer_path(cfg);
  if (queries_path.empty()) queries_path = cfg.paths.queries;
  require(!queries_path.empty(), "no queries (flag --queries or paths.queries)");
  if (corpus_path.empty() && index_path.empty()) corpus_path = cfg.paths.corpus;
  require(!corpus_path.empty() || !index_path.empty(),
          "give either --index or --corpus");
  if (output.empty()) output = "run.tsv";

  auto tokenizer = bpe::TokenizerModel::load(tokenizer_path);
  auto ck = nn::load_checkpoint(checkpoint_path);
  auto queries = retrieval::read_queries_jsonl(queries_path);

  std::vector<retrieval::RankedList> runs;
  retrieval::TimingReport timing;
  if (!index_path.empty()) {
    auto index = read_index_file(index_path);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RowVector> embs;
    embs.reserve(queries.size());
    for (const auto& q : queries)
      embs.push_back(retrieval::embed_text(ck.config, ck.params, tokenizer, q.text));
    const auto t1 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < queries.size(); ++i)
      runs.push_back(index.search(embs[i], cfg.retrieval.k, queries[i].id));
    const auto t2 = std::chrono::steady_clock::now();
    const double nq = static_cast<double>(queries.size());
    timing.num_queries = queries.size();
    timing.corpus_size = index.size();
    timing.workers = 1;
    timing.query_encode_per_query =
        std::chrono::duration<double>(t1 - t0).count() / nq;
    timing.search_per_query = std::chrono::duration<double>(t2 - t1).count() / nq;
    timing.per_query_excl_corpus =
        timing.query_encode_per_query + timing.search_per_query;
    timing.per_query_incl_corpus = timing.per_query_excl_corpus;  // prebuilt
  } else {
    auto corpus = retrieval::read_corpus_jsonl(corpus_path);
    auto result = retrieval::timed_run(ck.config, ck.params, tokenizer, corpus,
                                       queries, cfg.retrieval.k,
                                       cfg.retrieval.workers);
    runs = std::move(result.runs);
    timing = result.timing;
  }
  ensure_parent_dir(output);
  retrieval::write_run_tsv(output, runs);
  emit(timing.to_json());

  Manifest manifest("search", cfg.echo(), cfg.train.seed);
  manifest.add_input(checkpoint_path);
  manifest.add_input(tokenizer_path);
  manifest.add_input(queries_path);
  if (!index_path.empty()) manifest.add_input(index_path);
  if (!corpus_path.empty() && index_path.empty()) manifest.add_input(corpus_path);
  manifest.add_output(output);
  manifest.write(cfg.paths.reports);
  return 0;
}

int cmd_eval_retrieval(const CommonOpts& common, std::string run_path,
                       std::string qrels_path, int k_flag) {
  RunConfig cfg = load_config(common.config_path);
  if (k_flag > 0) cfg.retrieval.k = k_flag;
  cfg.validate();
  if (qrels_path.empty()) qrels_path = cfg.paths.qrels;
  require(!run_path.empty(), "--run is required");
  require(!qrels_path.empty(), "no qrels (flag --qrels or paths.qrels)");

  auto runs = retrieval::read_run_tsv(run_path);
  auto qrels = retrieval::read_qrels_tsv(qrels_path);
  const double recall = retrieval::recall_at_k(runs, qrels, cfg.retrieval.k);
  const auto ndcg = retrieval::ndcg_at_k(runs, qrels, cfg.retrieval.k);

  json report;
  report["k"] = cfg.retrieval.k;
  report["recall_at_k"] = recall;
  report["ndcg_at_k"] = ndcg.mean;
  report["queries"] = runs.size();
  report["ndcg_queries_evaluated"] = ndcg.evaluated;
  report["ndcg_queries_skipped_no_relevant"] = ndcg.skipped_no_relevant;
  if (ndcg.skipped_no_relevant > 0)
    std::cerr << "warning: " << ndcg.skipped_no_relevant
              << " queries had no relevant documents and were excluded from nDCG\n";
  emit(report.dump(2) + "\n");

  Manifest manifest("eval-retrieval", cfg.echo(), cfg.train.seed);
  manifest.add_input(run_path);
  manifest.add_input(qrels_path);
  manifest.write(cfg.paths.reports);
  return 0;
}

int cmd_eval_metrics(const CommonOpts& common, const std::string& metric,
                     const std::string& pred_path, const std::string& gold_path,
                     const std::string& scores_path, const std::string& name,
                     const std::string& format) {
  RunConfig cfg = load_config(common.config_path);
  json report;
  std::vector<std::string> inputs;
  std::ostringstream table;

  if (metric == "entity-f1") {
    require(!pred_path.empty() && !gold_path.empty(),
            "entity-f1 needs --pred and --gold IOB files");
    auto pred = evalkit::read_iob(pred_path);
    auto gold = evalkit::read_iob(gold_path);
    auto s = evalkit::entity_f1(pred, gold);
    report = {{"metric", "entity-f1"},
              {"precision", s.precision},
              {"recall", s.recall},
              {"f1", s.f1},
              {"documents", gold.size()}};
    table << "precision  " << s.precision << "\nrecall     " << s.recall
          << "\nf1         " << s.f1 << "\n";
    inputs = {pred_path, gold_path};
  } else if (metric == "qa-f1") {
    require(!pred_path.empty() && !gold_path.empty(),
            "qa-f1 needs --pred (JSON array of strings) and --gold (QA JSON)");
    std::ifstream gin(gold_path);
    require(gin.good(), "cannot open gold file: " + gold_path);
    json gold = json::parse(gin, nullptr, true);
    std::ifstream pin(pred_path);
    require(pin.good(), "cannot open predictions file: " + pred_path);
    json preds = json::parse(pin, nullptr, true);
    require(gold.is_array() && preds.is_array(), "qa files must be JSON arrays");
    require(gold.size() == preds.size(),
            "prediction count does not match gold count");
    double total = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      std::vector<std::string> answers;
      for (const auto& a : gold[i].value("answers", json::array()))
        answers.push_back(a.at("text").get<std::string>());
      total += evalkit::qa_f1(preds[i].get<std::string>(), answers);
    }
    const double mean = gold.empty() ? 0.0 : total / static_cast<double>(gold.size());
    report = {{"metric", "qa-f1"}, {"f1", mean}, {"examples", gold.size()}};
    table << "qa-f1  " << mean << "  (" << gold.size() << " examples)\n";
    inputs = {pred_path, gold_path};
  } else if (metric == "pearson") {
    require(!pred_path.empty() && !gold_path.empty(),
            "pearson needs --pred (one score per line) and --gold (TSV "
            "sentence1<TAB>sentence2<TAB>score)");
    std::ifstream gin(gold_path);
    require(gin.good(), "cannot open gold file: " + gold_path);
    std::vector<double> gold_scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(gin, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? std::string::npos
                                              : line.find('\t', t1 + 1);
      require(t2 != std::string::npos,
              gold_path + ":" + std::to_string(line_no) +
                  ": expected sentence1<TAB>sentence2<TAB>score");
      gold_scores.push_back(std::stod(line.substr(t2 + 1)));
    }
    std::ifstream pin(pred_path);
    require(pin.good(), "cannot open predictions file: " + pred_path);
    std::vector<double> pred_scores;
    while (std::getline(pin, line)) {
      if (line.empty()) continue;
      pred_scores.push_back(std::stod(line));
    }
    const double r = evalkit::pearson(pred_scores, gold_scores);
    report = {{"metric", "pearson"}, {"pearson", r}, {"pairs", gold_scores.size()}};
    table << "pearson  " << r << "\n";
    inputs = {pred_path, gold_path};
  } else if (metric == "accuracy") {
    require(!pred_path.empty() && !gold_path.empty(),
            "accuracy needs --pred and --gold label files (one label per line)");
    auto read_labels = [](const std::string& path) {
      std::ifstream in(path);
      require(in.good(), "cannot open label file: " + path);
      std::vector<std::string> out;
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
      return out;
    };
    auto pred = read_labels(pred_path);
    auto gold = read_labels(gold_path);
    const double acc = evalkit::accuracy(pred, gold);
    report = {{"metric", "accuracy"}, {"accuracy", acc}, {"examples", gold.size()}};
    table << "accuracy  " << acc << "\n";
    inputs = {pred_path, gold_path};
  } else if (metric == "aggregate") {
    require(!scores_path.empty(),
            "aggregate needs --scores (JSON task -> dataset -> score or "
            "[per-seed scores])");
    std::ifstream in(scores_path);
    require(in.good(), "cannot open scores file: " + scores_path);
    json scores = json::parse(in, nullptr, true);
    std::map<std::string, std::map<std::string, double>> flat;
    json per_dataset = json::object();
    for (auto task = scores.begin(); task != scores.end(); ++task) {
      require(task.value().is_object(),
              "aggregate: task entries must map dataset -> score");
      for (auto ds = task.value().begin(); ds != task.value().end(); ++ds) {
        evalkit::SeedStats stats;
        if (ds.value().is_array()) {
          std::vector<double> vals;
          for (const auto& v : ds.value()) vals.push_back(v.get<double>());
          stats = evalkit::seed_stats(vals);
          per_dataset[task.key()][ds.key()] = {{"mean", stats.mean},
                                               {"stdev", stats.stdev},
                                               {"seeds", vals.size()}};
        } else {
          stats.mean = ds.value().get<double>();
          per_dataset[task.key()][ds.key()] = {{"mean", stats.mean}};
        }
        flat[task.key()][ds.key()] = stats.mean;
      }
    }
    auto mm = evalkit::micro_macro(flat);
    report = {{"metric", name.empty() ? "aggregate" : name},
              {"micro", mm.micro},
              {"macro", mm.macro},
              {"per_dataset", per_dataset}};
    table << "micro  " << mm.micro << "\nmacro  " << mm.macro << "\n";
    inputs = {scores_path};
  } else {
    throw ValidationError(
        "unknown --metric (entity-f1 | qa-f1 | pearson | accuracy | aggregate): " +
        metric);
  }

  emit(format == "table" ? table.str() : report.dump(2) + "\n");
  Manifest manifest("eval-metrics", cfg.echo(), cfg.train.seed);
  for (const auto& p : inputs) manifest.add_input(p);
  manifest.write(cfg.paths.reports);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"densekit: byte-level BPE tokenization, tiny dense encoders, "
               "contrastive training, distillation and exact retrieval"};
  app.require_subcommand(1);
  CommonOpts common;

  // train-tokenizer
  auto* tt = app.add_subcommand("train-tokenizer",
                                "Train a byte-level BPE tokenizer from a corpus");
  std::string tt_input, tt_output;
  int tt_vocab = -1, tt_lower = -1;
  tt->add_option("--config", common.config_path, "Run configuration file");
  tt->add_option("--input", tt_input, "Corpus: one document per line, or .jsonl with a text field");
  tt->add_option("--output", tt_output, "Tokenizer model file to write");
  tt->add_option("--vocab-size", tt_vocab, "Target vocabulary size");
  tt->add_option("--lowercase", tt_lower, "1 = lowercase before tokenizing, 0 = keep case");

  // analyze-vocab
  auto* av = app.add_subcommand("analyze-vocab", "Vocabulary overlap of two tokenizers");
  std::string av_a, av_b, av_format = "json";
  av->add_option("--config", common.config_path, "Run configuration file");
  av->add_option("--a", av_a, "First tokenizer model")->required();
  av->add_option("--b", av_b, "Second tokenizer model")->required();
  av->add_option("--format", av_format, "json | table");

  // token-stats
  auto* ts = app.add_subcommand("token-stats",
                                "Token counts for tokenizers over one sample set");
  std::vector<std::string> ts_models;
  std::string ts_samples, ts_format = "json";
  ts->add_option("--config", common.config_path, "Run configuration file");
  ts->add_option("--model", ts_models, "NAME=PATH of a tokenizer model (repeatable)")
      ->required();
  ts->add_option("--samples", ts_samples, "Sample texts file")->required();
  ts->add_option("--format", ts_format, "json | table");

  // training commands
  std::string tr_tokenizer, tr_output, tr_log, tr_teacher;
  auto add_train_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "Run configuration file");
    cmd->add_option("--tokenizer", tr_tokenizer, "Tokenizer model file");
    cmd->add_option("--output", tr_output, "Checkpoint file to write");
    cmd->add_option("--log", tr_log, "Training log (JSON Lines)");
  };
  auto* pm = app.add_subcommand("pretrain-mlm", "Masked-language-model pretraining");
  add_train_opts(pm);
  auto* te = app.add_subcommand("train-embedder", "Stage-wise embedder training");
  add_train_opts(te);
  te->add_option("--teacher", tr_teacher, "Teacher checkpoint (KD objectives)");
  auto* di = app.add_subcommand("distill", "One-stage similarity distillation");
  add_train_opts(di);
  di->add_option("--teacher", tr_teacher, "Teacher checkpoint")->required();

  // index
  auto* ix = app.add_subcommand("index", "Encode a corpus into a search-ready index");
  std::string ix_ckpt, ix_tokenizer, ix_corpus, ix_output;
  ix->add_option("--config", common.config_path, "Run configuration file");
  ix->add_option("--checkpoint", ix_ckpt, "Encoder checkpoint")->required();
  ix->add_option("--tokenizer", ix_tokenizer, "Tokenizer model file");
  ix->add_option("--corpus", ix_corpus, "Corpus JSONL ({_id, title, text})");
  ix->add_option("--output", ix_output, "Index file to write");

  // search
  auto* se = app.add_subcommand("search", "Exact top-k retrieval with timing");
  std::string se_ckpt, se_tokenizer, se_index, se_corpus, se_queries, se_output;
  int se_k = -1, se_workers = -1;
  se->add_option("--config", common.config_path, "Run configuration file");
  se->add_option("--checkpoint", se_ckpt, "Encoder checkpoint")->required();
  se->add_option("--tokenizer", se_tokenizer, "Tokenizer model file");
  se->add_option("--index", se_index, "Prebuilt index file");
  se->add_option("--corpus", se_corpus, "Corpus JSONL (encodes on the fly, timed)");
  se->add_option("--queries", se_queries, "Queries JSONL ({_id, text})");
  se->add_option("--output", se_output, "Run file to write (TSV)");
  se->add_option("--k", se_k, "Results per query");
  se->add_option("--workers", se_workers, "Corpus-encoding worker threads");

  // eval-retrieval
  auto* er = app.add_subcommand("eval-retrieval", "Ranking metrics for a run file");
  std::string er_run, er_qrels;
  int er_k = -1;
  er->add_option("--config", common.config_path, "Run configuration file");
  er->add_option("--run", er_run, "Run file (TSV)")->required();
  er->add_option("--qrels", er_qrels, "Qrels file (TSV with header)");
  er->add_option("--k", er_k, "Cutoff");

  // eval-metrics
  auto* em = app.add_subcommand("eval-metrics", "Downstream metric computation");
  std::string em_metric, em_pred, em_gold, em_scores, em_name, em_format = "json";
  em->add_option("--config", common.config_path, "Run configuration file");
  em->add_option("--metric", em_metric,
                 "entity-f1 | qa-f1 | pearson | accuracy | aggregate")
      ->required();
  em->add_option("--pred", em_pred, "Predictions file");
  em->add_option("--gold", em_gold, "Gold file");
  em->add_option("--scores", em_scores, "task -> dataset -> score JSON (aggregate)");
  em->add_option("--name", em_name, "Metric name echoed in the report");
  em->add_option("--format", em_format, "json | table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return 1;
  }

  try {
    if (tt->parsed())
      return cmd_train_tokenizer(common, tt_input, tt_output, tt_vocab, tt_lower);
    if (av->parsed()) return cmd_analyze_vocab(common, av_a, av_b, av_format);
    if (ts->parsed()) return cmd_token_stats(common, ts_models, ts_samples, ts_format);
    if (pm->parsed())
      return run_training_command("pretrain-mlm", common, tr_tokenizer, tr_output,
                                  tr_log, "", /*force_mlm=*/true);
    if (te->parsed())
      return run_training_command("train-embedder", common, tr_tokenizer,
                                  tr_output, tr_log, tr_teacher,
                                  /*force_mlm=*/false);
    if (di->parsed())
      return cmd_distill(common, tr_tokenizer, tr_teacher, tr_output, tr_log);
    if (ix->parsed())
      return cmd_index(common, ix_ckpt, ix_tokenizer, ix_corpus, ix_output);
    if (se->parsed())
      return cmd_search(common, se_ckpt, se_tokenizer, se_index, se_corpus,
                        se_queries, se_output, se_k, se_workers);
    if (er->parsed()) return cmd_eval_retrieval(common, er_run, er_qrels, er_k);
    if (em->parsed())
      return cmd_eval_metrics(common, em_metric, em_pred, em_gold, em_scores,
                              em_name, em_format);
    std::cerr << "error[validation]: no subcommand given\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace densekit::cli
