#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvrowsim {

enum class Op { Read, Write };

struct TraceRecord {
  std::uint64_t gap = 0;  // instructions since the previous record
  Op op = Op::Read;
  std::uint64_t address = 0;

  bool operator==(const TraceRecord&) const = default;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Lines are `<gap>,<R|W>,0x<hex address>`; lines starting with '#' and empty
// lines are skipped. Addresses at or above `capacity` are rejected.
std::vector<TraceRecord> parse_trace(std::istream& in,
                                     std::optional<std::uint64_t> capacity = {});
std::vector<TraceRecord> load_trace(const std::string& path,
                                    std::optional<std::uint64_t> capacity = {});

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);

enum class GeneratorKind { Stream, Random, Strided, Mixed };

const char* to_string(GeneratorKind k);
GeneratorKind parse_generator_kind(const std::string& s);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Stream;
  std::uint64_t length = 1;
  std::uint64_t footprint_bytes = 64;
  double gap_mean = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t stride = 64;        // Strided only
  double read_fraction = 1.0;       // Mixed defaults to 0.5 when parsed
  std::uint64_t base_address = 0;   // added to every emitted address
};

// Deterministic synthetic trace. Stream walks 64B blocks and wraps at the
// footprint; Random draws blocks uniformly; Strided steps by `stride` bytes;
// Mixed interleaves a stream and uniform random blocks half and half.
// Records are reads with probability `read_fraction`; gaps are geometric with
// mean `gap_mean`.
std::vector<TraceRecord> generate(const GeneratorSpec& spec);

// Parses "kind=random,length=1000,footprint=1048576,gap=10,seed=3,...".
GeneratorSpec parse_generator_spec(const std::string& text);
std::string format_generator_spec(const GeneratorSpec& spec);

}  // namespace nvrowsim
