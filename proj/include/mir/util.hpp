#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mir {

using json = nlohmann::json;

// Thrown on unrecoverable input problems (duplicate ids, bad formats).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercases, then splits on any non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

// Streams one JSON object per line. Calls on_record(line_number, obj) for
// parseable lines and on_bad(line_number, message) otherwise. Blank lines
// are skipped. Line numbers are 1-based.
void for_each_jsonl(std::istream& in,
                    const std::function<void(std::size_t, const json&)>& on_record,
                    const std::function<void(std::size_t, const std::string&)>& on_bad);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
// Writes to a temp file in the same directory, then renames over the target.
void write_file_atomic(const std::string& path, std::string_view content);

// Little-endian binary io for the artifact file formats.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string bytes(std::size_t n);
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const;
    std::string_view data_;
    std::size_t pos_ = 0;
};

// Draws integers and reals from any uniform-random-bit generator with a
// fixed, implementation-independent mapping, so artifact bytes depend only
// on the generator's output sequence.
template <class Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

// Uniform on (0, 1]; never returns 0 so "r <= alpha" is exact at alpha = 0.
template <class Rng>
double uniform_unit(Rng& rng) {
    const std::uint64_t x = (rng() >> 11) + 1;  // in [1, 2^53]
    return static_cast<double>(x) * 0x1.0p-53;
}

template <class Rng>
double uniform_in(Rng& rng, double lo, double hi) {
    const std::uint64_t x = rng() >> 11;  // in [0, 2^53)
    return lo + (hi - lo) * (static_cast<double>(x) * 0x1.0p-53);
}

// FNV-1a, used to derive per-stream seeds from (seed, labels...).
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t substream_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

}  // namespace mir
