#pragma once

#include <string>
#include <vector>

#include "densekit/common.hpp"

namespace densekit::evalkit {

struct IobDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // "O", "B-type", "I-type"
};

struct EntitySpan {
  std::string type;
  int start = 0;  // token index, inclusive
  int end = 0;    // token index, exclusive
  bool operator==(const EntitySpan&) const = default;
  bool operator<(const EntitySpan& o) const {
    return std::tie(type, start, end) < std::tie(o.type, o.start, o.end);
  }
};

/// token<TAB>tag lines, blank line between documents. Rejects misaligned
/// lines and tag-grammar violations (an I-type must continue a B-/I-type of
/// the same type) with the offending line number.
std::vector<IobDocument> read_iob(const std::string& path);
std::vector<IobDocument> parse_iob(const std::string& text,
                                   const std::string& origin = "<memory>");

/// Validates the tag grammar of one document; returns the strict spans.
std::vector<EntitySpan> extract_spans(const IobDocument& doc);

}  // namespace densekit::evalkit
