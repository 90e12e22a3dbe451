#include "nvrowsim/trace.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace nvrowsim {

TraceError::TraceError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error("trace line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out, int base = 10) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return ec == std::errc() && p == s.data() + s.size();
}

// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::uint64_t geometric(std::mt19937_64& rng, double mean) {
  if (mean <= 0) return 0;
  const double p = 1.0 / (1.0 + mean);
  const double u = 1.0 - unit(rng);  // (0, 1]
  return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

}  // namespace

std::vector<TraceRecord> parse_trace(std::istream& in,
                                     std::optional<std::uint64_t> capacity) {
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw TraceError(line_no, line.size() + 1, "expected <gap>,<R|W>,0x<address>");
    const std::string_view view(line);

    TraceRecord r;
    if (!parse_number(view.substr(0, c1), r.gap))
      throw TraceError(line_no, 1, "malformed gap '" + line.substr(0, c1) + "'");

    const auto op = view.substr(c1 + 1, c2 - c1 - 1);
    if (op == "R") {
      r.op = Op::Read;
    } else if (op == "W") {
      r.op = Op::Write;
    } else {
      throw TraceError(line_no, c1 + 2, "operation must be R or W");
    }

    const auto addr = view.substr(c2 + 1);
    if (addr.size() < 3 || addr[0] != '0' || (addr[1] != 'x' && addr[1] != 'X') ||
        !parse_number(addr.substr(2), r.address, 16))
      throw TraceError(line_no, c2 + 2, "malformed hex address");
    if (capacity && r.address >= *capacity)
      throw TraceError(line_no, c2 + 2, "address beyond physical space");
    records.push_back(r);
  }
  return records;
}

std::vector<TraceRecord> load_trace(const std::string& path,
                                    std::optional<std::uint64_t> capacity) {
  std::ifstream in(path);
  if (!in) throw TraceError(0, 0, "cannot open trace file '" + path + "'");
  return parse_trace(in, capacity);
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) {
    std::ostringstream hex;
    hex << std::uppercase << std::hex << r.address;
    out << r.gap << ',' << (r.op == Op::Read ? 'R' : 'W') << ",0x" << hex.str()
        << '\n';
  }
}

const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Stream: return "stream";
    case GeneratorKind::Random: return "random";
    case GeneratorKind::Strided: return "strided";
    case GeneratorKind::Mixed: return "mixed";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& s) {
  if (s == "stream") return GeneratorKind::Stream;
  if (s == "random") return GeneratorKind::Random;
  if (s == "strided") return GeneratorKind::Strided;
  if (s == "mixed") return GeneratorKind::Mixed;
  throw std::invalid_argument("unknown generator kind '" + s + "'");
}

std::vector<TraceRecord> generate(const GeneratorSpec& spec) {
  if (spec.footprint_bytes < 64)
    throw std::invalid_argument("generator footprint must be >= 64 bytes");
  if (spec.length == 0) throw std::invalid_argument("generator length must be >= 1");
  if (spec.kind == GeneratorKind::Strided && (spec.stride == 0 || spec.stride % 64 != 0))
    throw std::invalid_argument("stride must be a non-zero multiple of 64");
  if (spec.read_fraction < 0 || spec.read_fraction > 1)
    throw std::invalid_argument("read_fraction must lie in [0, 1]");

  std::mt19937_64 rng(spec.seed);
  const std::uint64_t blocks = spec.footprint_bytes / 64;
  std::uint64_t cursor = 0;

  std::vector<TraceRecord> out;
  out.reserve(spec.length);
  for (std::uint64_t i = 0; i < spec.length; ++i) {
    TraceRecord r;
    r.gap = geometric(rng, spec.gap_mean);
    std::uint64_t offset = 0;
    switch (spec.kind) {
      case GeneratorKind::Stream:
        offset = (i % blocks) * 64;
        break;
      case GeneratorKind::Random:
        offset = below(rng, blocks) * 64;
        break;
      case GeneratorKind::Strided:
        offset = (i * spec.stride) % (blocks * 64);
        break;
      case GeneratorKind::Mixed:
        if (rng() & 1) {
          offset = below(rng, blocks) * 64;
        } else {
          offset = (cursor++ % blocks) * 64;
        }
        break;
    }
    r.address = spec.base_address + offset;
    if (spec.read_fraction < 1.0)
      r.op = unit(rng) < spec.read_fraction ? Op::Read : Op::Write;
    out.push_back(r);
  }
  return out;
}

GeneratorSpec parse_generator_spec(const std::string& text) {
  GeneratorSpec spec;
  bool read_fraction_set = false;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("generator field '" + item + "' lacks '='");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    auto u64 = [&] {
      std::uint64_t v = 0;
      int base = 10;
      std::string_view s(value);
      if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        s.remove_prefix(2);
        base = 16;
      }
      if (!parse_number(s, v, base))
        throw std::invalid_argument("generator field '" + key + "' is not an integer");
      return v;
    };
    auto real = [&] {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::exception&) {
        throw std::invalid_argument("generator field '" + key + "' is not a number");
      }
    };
    if (key == "kind") spec.kind = parse_generator_kind(value);
    else if (key == "length") spec.length = u64();
    else if (key == "footprint") spec.footprint_bytes = u64();
    else if (key == "gap") spec.gap_mean = real();
    else if (key == "seed") spec.seed = u64();
    else if (key == "stride") spec.stride = u64();
    else if (key == "base") spec.base_address = u64();
    else if (key == "read_fraction") {
      spec.read_fraction = real();
      read_fraction_set = true;
    } else {
      throw std::invalid_argument("unknown generator field '" + key + "'");
    }
  }
  if (spec.kind == GeneratorKind::Mixed && !read_fraction_set) spec.read_fraction = 0.5;
  return spec;
}

std::string format_generator_spec(const GeneratorSpec& s) {
  std::ostringstream os;
  os << "kind=" << to_string(s.kind) << ",length=" << s.length
     << ",footprint=" << s.footprint_bytes << ",gap=" << s.gap_mean
     << ",seed=" << s.seed;
  if (s.kind == GeneratorKind::Strided) os << ",stride=" << s.stride;
  if (s.read_fraction != 1.0 || s.kind == GeneratorKind::Mixed)
    os << ",read_fraction=" << s.read_fraction;
  if (s.base_address != 0) os << ",base=" << s.base_address;
  return os.str();
}

}  // namespace nvrowsim
