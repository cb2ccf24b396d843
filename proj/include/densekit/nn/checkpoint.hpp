#pragma once

#include <string>

#include "densekit/nn/encoder.hpp"

namespace densekit::nn {

/// Checkpoint container, one file:
///   bytes 0..7    magic "DKCKPT01"
///   bytes 8..15   little-endian uint64 header length in bytes
///   header        UTF-8 JSON: format version, encoder config echo, and a
///                 tensor table [{name, rows, cols, offset}] with offsets in
///                 elements from the start of the payload
///   payload       all tensors back to back, column-major, little-endian
///                 IEEE-754 float64
struct Checkpoint {
  EncoderConfig config;
  ParameterSet params;
};

void save_checkpoint(const std::string& path, const EncoderConfig& config,
                     const ParameterSet& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace densekit::nn
