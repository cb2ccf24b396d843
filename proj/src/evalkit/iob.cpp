#include "densekit/evalkit/iob.hpp"

#include <fstream>
#include <sstream>

namespace densekit::evalkit {

namespace {
void check_tag(const std::string& tag, const std::string& prev,
               const std::string& origin, std::size_t line_no) {
  auto fail = [&](const std::string& what) {
    throw ValidationError(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  if (tag == "O") return;
  if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-')
    fail("malformed tag: " + tag);
  if (tag[0] == 'I') {
    const std::string type = tag.substr(2);
    const bool continues =
        (prev.size() > 2 && (prev[0] == 'B' || prev[0] == 'I') &&
         prev.substr(2) == type);
    if (!continues) fail("I-" + type + " does not continue a span of its type");
  }
}
}  // namespace

std::vector<IobDocument> parse_iob(const std::string& text,
                                   const std::string& origin) {
  std::vector<IobDocument> docs;
  IobDocument current;
  std::string prev_tag = "O";
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) {
      docs.push_back(std::move(current));
      current = IobDocument{};
    }
    prev_tag = "O";
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ValidationError(origin + ":" + std::to_string(line_no) +
                            ": expected token<TAB>tag");
    const std::string token = line.substr(0, tab);
    const std::string tag = line.substr(tab + 1);
    check_tag(tag, prev_tag, origin, line_no);
    current.tokens.push_back(token);
    current.tags.push_back(tag);
    prev_tag = tag;
  }
  flush();
  return docs;
}

std::vector<IobDocument> read_iob(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open IOB file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_iob(buf.str(), path);
}

std::vector<EntitySpan> extract_spans(const IobDocument& doc) {
  require(doc.tokens.size() == doc.tags.size(),
          "tokens and tags must align one-to-one");
  std::vector<EntitySpan> spans;
  EntitySpan open;
  bool in_span = false;
  auto close = [&](int end) {
    if (in_span) {
      open.end = end;
      spans.push_back(open);
      in_span = false;
    }
  };
  for (std::size_t i = 0; i < doc.tags.size(); ++i) {
    const std::string& tag = doc.tags[i];
    if (tag == "O") {
      close(static_cast<int>(i));
      continue;
    }
    require(tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-',
            "malformed tag: " + tag);
    const std::string type = tag.substr(2);
    if (tag[0] == 'B') {
      close(static_cast<int>(i));
      open = EntitySpan{type, static_cast<int>(i), 0};
      in_span = true;
    } else {
      require(in_span && open.type == type,
              "I-" + type + " does not continue a span of its type");
    }
  }
  close(static_cast<int>(doc.tags.size()));
  return spans;
}

}  // namespace densekit::evalkit
