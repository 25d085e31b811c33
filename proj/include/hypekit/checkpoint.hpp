#pragma once

// Checkpoint files: a text header terminated by a blank line, followed by
// the parameter arrays as little-endian IEEE-754 values in row-major order.
//
//   hypekit-checkpoint 1
//   model	hype
//   entities	<|E|>          relations	<|R|>
//   dim, rel_dim, filters, filter_len, stride, max_arity, seed
//   precision	f32|f64
//   vocab_hash	<16 hex digits>
//   entity	<name>                  (|E| lines, id order)
//   relation	<name>	<arity>        (|R| lines, id order)
//   array	<block>	<rows>	<cols>   (entities, relations, filters, projection)
//   <blank line>
//   <payload>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "hypekit/data.hpp"
#include "hypekit/models.hpp"

namespace hypekit {

enum class Precision { F32, F64 };

std::string_view to_string(Precision p);
/// Accepts "f32" and "f64".
Precision parse_precision(std::string_view name);

struct Checkpoint {
  Model model;
  /// Names for the model's entity and relation rows.
  Vocab vocab;
  std::uint64_t seed = 0;
  Precision precision = Precision::F32;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws CheckpointError on a malformed header or when the payload length
/// differs from what the header declares.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The checkpoint's model with rows reordered to `target`'s ids. Throws
/// CheckpointError naming both vocab hashes when the name sets differ.
Model align_to_vocab(const Checkpoint& ckpt, const Vocab& target);

std::string format_hash(std::uint64_t h);

}  // namespace hypekit
