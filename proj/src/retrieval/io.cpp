#include "densekit/retrieval/io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace densekit::retrieval {

using json = nlohmann::json;

namespace {
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

json parse_line(const std::string& path, std::size_t line_no, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(path + ":" + std::to_string(line_no) +
                          ": invalid JSON: " + e.what());
  }
}
}  // namespace

std::vector<CorpusDoc> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open corpus file: " + path);
  std::vector<CorpusDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_line(path, line_no, line);
    CorpusDoc d;
    require(j.contains("_id"), path + ":" + std::to_string(line_no) + ": missing _id");
    d.id = j.at("_id").is_string() ? j.at("_id").get<std::string>()
                                   : j.at("_id").dump();
    d.title = j.value("title", std::string{});
    d.text = j.value("text", std::string{});
    docs.push_back(std::move(d));
  }
  require(!docs.empty(), "corpus file has no documents: " + path);
  return docs;
}

std::vector<Query> read_queries_jsonl(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open queries file: " + path);
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_line(path, line_no, line);
    Query q;
    require(j.contains("_id"), path + ":" + std::to_string(line_no) + ": missing _id");
    q.id = j.at("_id").is_string() ? j.at("_id").get<std::string>()
                                   : j.at("_id").dump();
    q.text = j.value("text", std::string{});
    queries.push_back(std::move(q));
  }
  require(!queries.empty(), "queries file has no entries: " + path);
  return queries;
}

Qrels read_qrels_tsv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open qrels file: " + path);
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_skipped) {
      header_skipped = true;  // one header line, by format
      continue;
    }
    auto cols = split_tabs(line);
    require(cols.size() == 3, path + ":" + std::to_string(line_no) +
                                  ": expected 3 tab-separated columns");
    int grade = 0;
    try {
      grade = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": score is not an integer: " + cols[2]);
    }
    qrels.add(cols[0], cols[1], grade);
  }
  require(qrels.num_queries() > 0, "qrels file has no judgments: " + path);
  return qrels;
}

void write_qrels_tsv(const std::string& path, const Qrels& qrels) {
  std::ofstream out(path);
  require(out.good(), "cannot open qrels file for writing: " + path);
  out << "query-id\tcorpus-id\tscore\n";
  for (const auto& [qid, judged] : qrels.all())
    for (const auto& [doc, grade] : judged)
      out << qid << '\t' << doc << '\t' << grade << '\n';
  require(out.good(), "failed writing qrels file: " + path);
}

void write_run_tsv(const std::string& path, const std::vector<RankedList>& runs) {
  std::ofstream out(path);
  require(out.good(), "cannot open run file for writing: " + path);
  out << std::setprecision(17);
  for (const auto& run : runs) {
    int rank = 1;
    for (const auto& hit : run.hits)
      out << run.query_id << '\t' << hit.doc_id << '\t' << rank++ << '\t'
          << hit.score << '\n';
  }
  require(out.good(), "failed writing run file: " + path);
}

std::vector<RankedList> read_run_tsv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open run file: " + path);
  std::vector<RankedList> runs;
  std::map<std::string, std::size_t> index_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    require(cols.size() == 4, path + ":" + std::to_string(line_no) +
                                  ": expected 4 tab-separated columns");
    Scalar score = 0;
    try {
      score = std::stod(cols[3]);
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": score is not a number: " + cols[3]);
    }
    auto it = index_of.find(cols[0]);
    if (it == index_of.end()) {
      index_of[cols[0]] = runs.size();
      runs.push_back(RankedList{cols[0], {}});
      it = index_of.find(cols[0]);
    }
    runs[it->second].hits.push_back({cols[1], score});
  }
  require(!runs.empty(), "run file has no entries: " + path);
  return runs;
}

}  // namespace densekit::retrieval
