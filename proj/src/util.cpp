#include "util.hpp"

#include <fstream>
#include <sstream>

#include "error.hpp"

namespace fer {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::bounds: return "bounds";
    case ErrorCode::shape: return "shape";
    case ErrorCode::train: return "train";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io, "cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::io, "read failed: " + path);
  return bytes;
}

void write_binary_file(const std::string& path, const void* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io, "cannot open file for writing: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) raise(ErrorCode::io, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  auto bytes = read_binary_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::string& path, const std::string& text) {
  write_binary_file(path, text.data(), text.size());
}

}  // namespace fer
