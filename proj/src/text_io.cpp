#include "objval/text_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "objval/errors.hpp"

namespace objval {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::string_view suffix) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace objval

namespace objval {

RecordWriter::RecordWriter(std::string_view format, std::string_view config_hash) {
  text_.append(format).append(" ").append(config_hash.empty() ? "-" : config_hash).append("\n");
}

void RecordWriter::put(std::string_view key, const std::vector<double>& values) {
  text_.append(key);
  for (const double v : values) text_.append(" ").append(format_double(v));
  text_.append("\n");
}

void RecordWriter::put(std::string_view key, std::string_view token) {
  text_.append(key).append(" ").append(token).append("\n");
}

void RecordWriter::put(std::string_view key, long value) { put(key, std::to_string(value)); }

RecordReader::RecordReader(std::string_view text, std::string_view expected_format) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty artifact, expected " + std::string(expected_format));
  std::istringstream header(line);
  std::string format;
  header >> format >> config_hash_;
  if (format != expected_format) {
    throw FormatError("expected format " + std::string(expected_format) + ", found '" + format + "'");
  }
  if (config_hash_ == "-") config_hash_.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::vector<std::string> toks;
    for (std::string tok; ls >> tok;) toks.push_back(std::move(tok));
    fields_.emplace_back(std::move(key), std::move(toks));
  }
}

bool RecordReader::has(std::string_view key) const {
  return std::any_of(fields_.begin(), fields_.end(), [&](const auto& f) { return f.first == key; });
}

const std::vector<std::string>& RecordReader::tokens(std::string_view key) const {
  for (const auto& f : fields_) {
    if (f.first == key) return f.second;
  }
  throw FormatError("missing field '" + std::string(key) + "'");
}

std::vector<double> RecordReader::doubles(std::string_view key) const {
  std::vector<double> out;
  for (const auto& tok : tokens(key)) out.push_back(parse_double(tok));
  return out;
}

std::string RecordReader::token(std::string_view key) const {
  const auto& toks = tokens(key);
  if (toks.size() != 1) throw FormatError("field '" + std::string(key) + "' expects one token");
  return toks.front();
}

long RecordReader::integer(std::string_view key) const {
  const std::string tok = token(key);
  long value = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError("field '" + std::string(key) + "' is not an integer");
  }
  return value;
}

}  // namespace objval
