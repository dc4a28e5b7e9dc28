// Shared plumbing: errors, seeded RNG helpers, bit-exact float text, hashing.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcda {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Deterministic stream splitting so per-dialogue draws do not depend on
// processing order.
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0x9e3779b97f4a7c15ULL);

// Round-trip exact double <-> text (hexfloat).
std::string double_to_text(double v);
double text_to_double(const std::string& s);

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// When on, tensor construction rejects NaN/Inf payloads.
bool& checked_mode();

}  // namespace tcda
