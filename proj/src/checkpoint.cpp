#include "hypekit/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hypekit/error.hpp"

namespace hypekit {

namespace {

constexpr std::string_view kMagic = "hypekit-checkpoint 1";
constexpr const char* kBlockNames[] = {"entities", "relations", "filters", "projection"};

template <typename U>
void put_le(std::ostream& out, U bits) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, sizeof(U));
}

template <typename U>
U get_le(const unsigned char* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return bits;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::uint64_t to_u64(const std::string& s, std::string_view what, int base = 10) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw CheckpointError("bad " + std::string(what) + " value '" + s + "'");
  }
  return v;
}

const Matrix& block(const Model& m, std::size_t i) {
  switch (i) {
    case 0: return m.entities();
    case 1: return m.relations();
    case 2: return m.filters();
    default: return m.projection();
  }
}

}  // namespace

std::string_view to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view name) {
  if (name == "f32") return Precision::F32;
  if (name == "f64") return Precision::F64;
  throw ConfigError("unknown precision '" + std::string(name) + "' (expected f32 or f64)");
}

std::string format_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const Model& m = ckpt.model;
  const ModelConfig& c = m.config();
  if (ckpt.vocab.num_entities() != c.num_entities ||
      ckpt.vocab.num_relations() != c.num_relations) {
    throw CheckpointError("vocab size does not match the model");
  }
  out << kMagic << '\n'
      << "model\t" << to_string(c.kind) << '\n'
      << "entities\t" << c.num_entities << '\n'
      << "relations\t" << c.num_relations << '\n'
      << "dim\t" << c.dim << '\n'
      << "rel_dim\t" << c.relation_dim() << '\n'
      << "filters\t" << c.filters << '\n'
      << "filter_len\t" << c.filter_len << '\n'
      << "stride\t" << c.stride << '\n'
      << "max_arity\t" << c.max_arity << '\n'
      << "seed\t" << ckpt.seed << '\n'
      << "precision\t" << to_string(ckpt.precision) << '\n'
      << "vocab_hash\t" << format_hash(ckpt.vocab.hash()) << '\n';
  for (const auto& n : ckpt.vocab.entity_names()) out << "entity\t" << n << '\n';
  for (RelationId r = 0; r < ckpt.vocab.num_relations(); ++r) {
    out << "relation\t" << ckpt.vocab.relation_name(r) << '\t' << ckpt.vocab.arity(r) << '\n';
  }
  for (std::size_t b = 0; b < 4; ++b) {
    const Matrix& mat = block(m, b);
    out << "array\t" << kBlockNames[b] << '\t' << mat.rows() << '\t' << mat.cols() << '\n';
  }
  out << '\n';
  for (std::size_t b = 0; b < 4; ++b) {
    for (double v : block(m, b).values()) {
      if (ckpt.precision == Precision::F32) {
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        put_le(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  if (!out) throw CheckpointError("write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw CheckpointError("not a checkpoint file");

  ModelConfig cfg;
  Checkpoint ckpt;
  std::string precision, hash;
  std::size_t arrays = 0;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  while (true) {
    if (!std::getline(in, line)) throw CheckpointError("header is not terminated");
    if (line.empty()) break;
    const auto f = split_tabs(line);
    const std::string& key = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) throw CheckpointError("malformed header line '" + line + "'");
    };
    if (key == "entity") {
      need(2);
      ckpt.vocab.add_entity(f[1]);
    } else if (key == "relation") {
      need(3);
      ckpt.vocab.add_relation(f[1], to_u64(f[2], "arity"));
    } else if (key == "array") {
      need(4);
      if (arrays >= 4 || f[1] != kBlockNames[arrays]) {
        throw CheckpointError("unexpected array '" + f[1] + "'");
      }
      shapes.emplace_back(to_u64(f[2], "rows"), to_u64(f[3], "cols"));
      ++arrays;
    } else {
      need(2);
      const std::string& v = f[1];
      if (key == "model") cfg.kind = parse_model_kind(v);
      else if (key == "entities") cfg.num_entities = to_u64(v, key);
      else if (key == "relations") cfg.num_relations = to_u64(v, key);
      else if (key == "dim") cfg.dim = to_u64(v, key);
      else if (key == "rel_dim") cfg.rel_dim = to_u64(v, key);
      else if (key == "filters") cfg.filters = to_u64(v, key);
      else if (key == "filter_len") cfg.filter_len = to_u64(v, key);
      else if (key == "stride") cfg.stride = to_u64(v, key);
      else if (key == "max_arity") cfg.max_arity = to_u64(v, key);
      else if (key == "seed") ckpt.seed = to_u64(v, key);
      else if (key == "precision") precision = v;
      else if (key == "vocab_hash") hash = v;
      else throw CheckpointError("unknown header key '" + key + "'");
    }
  }
  if (arrays != 4) throw CheckpointError("header declares " + std::to_string(arrays) + " arrays, expected 4");
  try {
    ckpt.precision = parse_precision(precision);
    ckpt.model = Model(cfg);
  } catch (const Error& e) {
    throw CheckpointError(std::string("invalid header: ") + e.what());
  }
  if (ckpt.vocab.num_entities() != cfg.num_entities ||
      ckpt.vocab.num_relations() != cfg.num_relations) {
    throw CheckpointError("vocab tables do not match the declared sizes");
  }
  if (format_hash(ckpt.vocab.hash()) != hash) {
    throw CheckpointError("vocab hash " + hash + " does not match the stored tables (" +
                          format_hash(ckpt.vocab.hash()) + ")");
  }
  std::size_t values = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    const Matrix& mat = block(ckpt.model, b);
    if (shapes[b].first != mat.rows() || shapes[b].second != mat.cols()) {
      throw CheckpointError(std::string("array ") + kBlockNames[b] + " shape does not match the model");
    }
    values += mat.size();
  }

  const std::size_t width = ckpt.precision == Precision::F32 ? 4 : 8;
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  if (payload.size() != values * width) {
    throw CheckpointError("payload has " + std::to_string(payload.size()) + " bytes, header declares " +
                          std::to_string(values * width));
  }
  const unsigned char* p = payload.data();
  for (auto span : ckpt.model.parameter_blocks()) {
    for (double& v : span) {
      if (width == 4) {
        v = std::bit_cast<float>(get_le<std::uint32_t>(p));
      } else {
        v = std::bit_cast<double>(get_le<std::uint64_t>(p));
      }
      p += width;
    }
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return load_checkpoint(in);
}

Model align_to_vocab(const Checkpoint& ckpt, const Vocab& target) {
  const Vocab& src = ckpt.vocab;
  const auto mismatch = [&] {
    return CheckpointError("vocab mismatch: checkpoint hash " + format_hash(src.hash()) +
                           ", dataset hash " + format_hash(target.hash()));
  };
  if (src.hash() != target.hash() || src.num_entities() != target.num_entities() ||
      src.num_relations() != target.num_relations()) {
    throw mismatch();
  }
  Model out(ckpt.model.config());
  const Model& in = ckpt.model;
  for (EntityId e = 0; e < target.num_entities(); ++e) {
    const auto s = src.find_entity(target.entity_name(e));
    if (!s) throw mismatch();
    const auto from = in.entities().row(*s);
    std::copy(from.begin(), from.end(), out.entities().row(e).begin());
  }
  for (RelationId r = 0; r < target.num_relations(); ++r) {
    const auto s = src.find_relation(target.relation_name(r));
    if (!s || src.arity(*s) != target.arity(r)) throw mismatch();
    const auto from = in.relations().row(*s);
    std::copy(from.begin(), from.end(), out.relations().row(r).begin());
  }
  out.filters() = in.filters();
  out.projection() = in.projection();
  return out;
}

}  // namespace hypekit
