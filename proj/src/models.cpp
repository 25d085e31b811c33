#include "hypekit/models.hpp"

#include <algorithm>
#include <string>

#include "hypekit/error.hpp"

namespace hypekit {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::HypE: return "hype";
    case ModelKind::HSimplE: return "hsimple";
    case ModelKind::MDistMult: return "m-distmult";
    case ModelKind::MCP: return "m-cp";
    case ModelKind::RSimplE: return "r-simple";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::HypE, ModelKind::HSimplE, ModelKind::MDistMult, ModelKind::MCP,
                 ModelKind::RSimplE}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(name) +
                    "' (expected hype, hsimple, m-distmult, m-cp or r-simple)");
}

std::size_t ModelConfig::feature_map_size() const {
  return hypekit::feature_map_size(dim, filter_len, stride);
}

std::size_t ModelConfig::entity_width() const noexcept {
  return kind == ModelKind::MCP ? dim * max_arity : dim;
}

void ModelConfig::validate() const {
  const std::string name(to_string(kind));
  if (dim == 0) throw ConfigError(name + ": embedding dimension must be positive");
  if (max_arity == 0) throw ConfigError(name + ": max arity must be at least 1");
  if (kind != ModelKind::HypE && relation_dim() != dim) {
    throw ConfigError(name + ": relation dimension must equal the entity dimension");
  }
  switch (kind) {
    case ModelKind::HSimplE:
      if (dim % max_arity != 0) {
        throw ConfigError("hsimple: max arity " + std::to_string(max_arity) +
                          " must divide the embedding dimension " + std::to_string(dim));
      }
      break;
    case ModelKind::RSimplE:
      if (max_arity != 2) throw ConfigError("r-simple: scores binary facts only (max arity 2)");
      if (dim % 2 != 0) {
        throw ConfigError("r-simple: embedding dimension must be even (two halves), got " +
                          std::to_string(dim));
      }
      break;
    case ModelKind::HypE:
      if (filters == 0) throw ConfigError("hype: need at least one filter per position");
      if (stride == 0) throw ConfigError("hype: stride must be positive");
      if (filter_len == 0 || filter_len > dim) {
        throw ConfigError("hype: filter length must lie in [1, dim]");
      }
      break;
    case ModelKind::MDistMult:
    case ModelKind::MCP:
      break;
  }
}

Vec& Gradients::entity(EntityId id, std::size_t width) {
  auto [it, fresh] = entities.try_emplace(id);
  if (fresh) it->second.assign(width, 0.0);
  return it->second;
}

Vec& Gradients::relation(RelationId id, std::size_t width) {
  auto [it, fresh] = relations.try_emplace(id);
  if (fresh) it->second.assign(width, 0.0);
  return it->second;
}

void Gradients::scale(double factor) {
  for (auto& [id, g] : entities) for (auto& x : g) x *= factor;
  for (auto& [id, g] : relations) for (auto& x : g) x *= factor;
  for (auto& x : filters) x *= factor;
  for (auto& x : projection) x *= factor;
}

void Gradients::add(const Gradients& other) {
  for (const auto& [id, g] : other.entities) {
    auto& dst = entity(id, g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
  for (const auto& [id, g] : other.relations) {
    auto& dst = relation(id, g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
  if (filters.empty()) filters.assign(other.filters.size(), 0.0);
  for (std::size_t i = 0; i < other.filters.size(); ++i) filters[i] += other.filters[i];
  if (projection.empty()) projection.assign(other.projection.size(), 0.0);
  for (std::size_t i = 0; i < other.projection.size(); ++i) projection[i] += other.projection[i];
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  if (config_.rel_dim == 0) config_.rel_dim = config_.dim;
  entities_ = Matrix(config_.num_entities, config_.entity_width());
  relations_ = Matrix(config_.num_relations, config_.relation_dim());
  if (config_.kind == ModelKind::HypE) {
    const std::size_t q = config_.feature_map_size();
    filters_ = Matrix(config_.max_arity * config_.filters, config_.filter_len);
    projection_ = Matrix(config_.filters * q, config_.relation_dim());
  }
}

void Model::initialize(Rng& rng, double init_std) {
  std::normal_distribution<double> normal(0.0, init_std);
  for (auto& x : entities_.values()) x = normal(rng);
  for (auto& x : relations_.values()) x = normal(rng);
  for (auto& x : filters_.values()) x = normal(rng);
  auto p = projection_.values();
  std::fill(p.begin(), p.end(), 0.0);
  for (std::size_t i = 0; i < std::min(projection_.rows(), projection_.cols()); ++i) {
    projection_(i, i) = 1.0;
  }
}

std::span<const double> Model::entity_row(EntityId id, const EntityOverride* ov) const {
  if (ov != nullptr && ov->id == id) return ov->values;
  return entities_.row(id);
}

std::size_t Model::shift_for(std::size_t position_index) const {
  return position_index * (config_.dim / config_.max_arity);
}

void Model::check_fact(const Fact& fact, const EntityOverride* ov) const {
  const std::size_t k = fact.arity();
  if (k == 0) throw ArityError("fact has no entities");
  if (config_.kind == ModelKind::RSimplE && k != 2) {
    throw ArityError("r-simple scores binary facts only, got arity " + std::to_string(k));
  }
  if (k > config_.max_arity) {
    throw ArityError("fact arity " + std::to_string(k) + " exceeds model max arity " +
                     std::to_string(config_.max_arity));
  }
  if (fact.relation >= config_.num_relations) {
    throw DataError("relation id " + std::to_string(fact.relation) + " out of range");
  }
  for (EntityId e : fact.entities) {
    if (e >= config_.num_entities && !(ov != nullptr && ov->id == e)) {
      throw DataError("entity id " + std::to_string(e) + " out of range");
    }
  }
  if (ov != nullptr && ov->values.size() != config_.entity_width()) {
    throw DimensionError("entity override has width " + std::to_string(ov->values.size()) +
                         ", expected " + std::to_string(config_.entity_width()));
  }
}

Vec Model::position_transform(std::span<const double> e, std::size_t position) const {
  if (config_.kind != ModelKind::HypE) {
    throw ConfigError("position_transform is defined for hype only");
  }
  if (position < 1 || position > config_.max_arity) {
    throw PositionError("position " + std::to_string(position) + " outside [1, " +
                        std::to_string(config_.max_arity) + "]");
  }
  if (e.size() != config_.dim) {
    throw DimensionError("entity vector has length " + std::to_string(e.size()) +
                         ", expected " + std::to_string(config_.dim));
  }
  const std::size_t n = config_.filters;
  const std::size_t q = config_.feature_map_size();
  Vec features;
  features.reserve(n * q);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec map = conv1d(e, filters_.row((position - 1) * n + j), config_.stride);
    features.insert(features.end(), map.begin(), map.end());
  }
  const std::size_t dr = config_.relation_dim();
  Vec out(dr, 0.0);
  for (std::size_t a = 0; a < features.size(); ++a) {
    const double c = features[a];
    if (c == 0.0) continue;
    const auto prow = projection_.row(a);
    for (std::size_t col = 0; col < dr; ++col) out[col] += c * prow[col];
  }
  return out;
}

Vec Model::position_vector(EntityId id, std::size_t position) const {
  if (position < 1 || position > config_.max_arity) {
    throw PositionError("position " + std::to_string(position) + " outside [1, " +
                        std::to_string(config_.max_arity) + "]");
  }
  const auto e = entities_.row(id);
  switch (config_.kind) {
    case ModelKind::HypE: return position_transform(e, position);
    case ModelKind::HSimplE: return circshift(e, shift_for(position - 1));
    case ModelKind::MDistMult: return Vec(e.begin(), e.end());
    case ModelKind::MCP: {
      const auto slice = e.subspan((position - 1) * config_.dim, config_.dim);
      return Vec(slice.begin(), slice.end());
    }
    case ModelKind::RSimplE: break;
  }
  throw ConfigError("r-simple has no per-position vector form");
}

namespace {

Vec dropout_mask(std::size_t width, const Dropout& dropout) {
  Vec mask(width, 1.0);
  if (dropout.rate <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - dropout.rate);
  const double scale = 1.0 / (1.0 - dropout.rate);
  for (auto& m : mask) m = keep(*dropout.rng) ? scale : 0.0;
  return mask;
}

}  // namespace

double Model::forward(const Fact& fact, TupleCache& cache, const Dropout& dropout,
                      const EntityOverride* ov) const {
  check_fact(fact, ov);
  if (dropout.rate > 0.0 && dropout.rng == nullptr) {
    throw ConfigError("dropout needs a random generator");
  }
  const bool drop = dropout.rate > 0.0;
  const std::size_t k = fact.arity();
  cache.fact = fact;
  cache.inputs.assign(k, {});
  cache.in_masks.assign(drop ? k : 0, {});
  cache.vectors.assign(k, {});
  cache.features.clear();
  cache.out_masks.clear();

  const std::size_t width = config_.kind == ModelKind::MCP ? config_.dim : config_.entity_width();
  for (std::size_t j = 0; j < k; ++j) {
    auto row = entity_row(fact.entities[j], ov);
    if (config_.kind == ModelKind::MCP) row = row.subspan(j * config_.dim, config_.dim);
    Vec in(row.begin(), row.end());
    if (drop) {
      cache.in_masks[j] = dropout_mask(width, dropout);
      for (std::size_t t = 0; t < width; ++t) in[t] *= cache.in_masks[j][t];
    }
    cache.inputs[j] = std::move(in);
  }

  const auto r = relations_.row(fact.relation);
  if (config_.kind == ModelKind::RSimplE) {
    const std::size_t h = config_.dim / 2;
    const Vec& a = cache.inputs[0];
    const Vec& b = cache.inputs[1];
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t t = 0; t < h; ++t) s1 += r[t] * a[t] * b[h + t];
    for (std::size_t t = 0; t < h; ++t) s2 += r[h + t] * b[t] * a[h + t];
    cache.score = s1 + s2;
    return cache.score;
  }

  if (config_.kind == ModelKind::HypE) {
    const std::size_t n = config_.filters;
    const std::size_t q = config_.feature_map_size();
    const std::size_t dr = config_.relation_dim();
    cache.features.assign(k, {});
    cache.out_masks.assign(drop ? k : 0, {});
    for (std::size_t j = 0; j < k; ++j) {
      Vec features;
      features.reserve(n * q);
      for (std::size_t m = 0; m < n; ++m) {
        const Vec map = conv1d(cache.inputs[j], filters_.row(j * n + m), config_.stride);
        features.insert(features.end(), map.begin(), map.end());
      }
      Vec out(dr, 0.0);
      for (std::size_t a = 0; a < features.size(); ++a) {
        const double c = features[a];
        if (c == 0.0) continue;
        const auto prow = projection_.row(a);
        for (std::size_t col = 0; col < dr; ++col) out[col] += c * prow[col];
      }
      if (drop) {
        cache.out_masks[j] = dropout_mask(dr, dropout);
        for (std::size_t t = 0; t < dr; ++t) out[t] *= cache.out_masks[j][t];
      }
      cache.features[j] = std::move(features);
      cache.vectors[j] = std::move(out);
    }
  } else if (config_.kind == ModelKind::HSimplE) {
    for (std::size_t j = 0; j < k; ++j) cache.vectors[j] = circshift(cache.inputs[j], shift_for(j));
  } else {
    for (std::size_t j = 0; j < k; ++j) cache.vectors[j] = cache.inputs[j];
  }

  std::vector<std::span<const double>> operands;
  operands.reserve(k + 1);
  operands.emplace_back(r);
  for (const auto& v : cache.vectors) operands.emplace_back(v);
  cache.score = dotsum(operands);
  return cache.score;
}

void Model::backward(const TupleCache& cache, double upstream, Gradients& grads) const {
  const Fact& fact = cache.fact;
  const std::size_t k = fact.arity();
  const auto r = relations_.row(fact.relation);
  const std::size_t dr = config_.relation_dim();
  Vec& gr = grads.relation(fact.relation, dr);

  auto add_entity_grad = [&](std::size_t j, const Vec& g_in, std::size_t offset) {
    Vec& ge = grads.entity(fact.entities[j], config_.entity_width());
    const bool masked = !cache.in_masks.empty();
    for (std::size_t t = 0; t < g_in.size(); ++t) {
      ge[offset + t] += masked ? g_in[t] * cache.in_masks[j][t] : g_in[t];
    }
  };

  if (config_.kind == ModelKind::RSimplE) {
    const std::size_t h = config_.dim / 2;
    const Vec& a = cache.inputs[0];
    const Vec& b = cache.inputs[1];
    Vec ga(config_.dim, 0.0);
    Vec gb(config_.dim, 0.0);
    for (std::size_t t = 0; t < h; ++t) {
      gr[t] += upstream * a[t] * b[h + t];
      gr[h + t] += upstream * b[t] * a[h + t];
      ga[t] = upstream * r[t] * b[h + t];
      ga[h + t] = upstream * r[h + t] * b[t];
      gb[h + t] = upstream * r[t] * a[t];
      gb[t] = upstream * r[h + t] * a[h + t];
    }
    add_entity_grad(0, ga, 0);
    add_entity_grad(1, gb, 0);
    return;
  }

  // Gradient of dotsum(r, v_1..v_k) w.r.t. each operand via prefix/suffix
  // products, so zero entries need no special casing.
  std::vector<const double*> ops;
  ops.push_back(r.data());
  for (const auto& v : cache.vectors) ops.push_back(v.data());
  const std::size_t m = ops.size();
  std::vector<Vec> gv(k, Vec(dr, 0.0));
  Vec prefix(m);
  for (std::size_t t = 0; t < dr; ++t) {
    double acc = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      prefix[i] = acc;
      acc *= ops[i][t];
    }
    double suffix = 1.0;
    for (std::size_t i = m; i-- > 0;) {
      const double g = upstream * prefix[i] * suffix;
      if (i == 0) {
        gr[t] += g;
      } else {
        gv[i - 1][t] = g;
      }
      suffix *= ops[i][t];
    }
  }

  switch (config_.kind) {
    case ModelKind::MDistMult:
      for (std::size_t j = 0; j < k; ++j) add_entity_grad(j, gv[j], 0);
      break;
    case ModelKind::MCP:
      for (std::size_t j = 0; j < k; ++j) add_entity_grad(j, gv[j], j * config_.dim);
      break;
    case ModelKind::HSimplE: {
      const std::size_t d = config_.dim;
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t x = shift_for(j) % d;
        Vec g_in(d, 0.0);
        for (std::size_t t = 0; t < d; ++t) g_in[(t + x) % d] += gv[j][t];
        add_entity_grad(j, g_in, 0);
      }
      break;
    }
    case ModelKind::HypE: {
      const std::size_t n = config_.filters;
      const std::size_t q = config_.feature_map_size();
      const std::size_t l = config_.filter_len;
      const std::size_t s = config_.stride;
      if (grads.filters.empty()) grads.filters.assign(filters_.size(), 0.0);
      if (grads.projection.empty()) grads.projection.assign(projection_.size(), 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        Vec gh = gv[j];
        if (!cache.out_masks.empty()) {
          for (std::size_t t = 0; t < dr; ++t) gh[t] *= cache.out_masks[j][t];
        }
        const Vec& features = cache.features[j];
        Vec gc(n * q, 0.0);
        for (std::size_t a = 0; a < n * q; ++a) {
          const auto prow = projection_.row(a);
          double* gp = grads.projection.data() + a * dr;
          const double c = features[a];
          double acc = 0.0;
          for (std::size_t col = 0; col < dr; ++col) {
            gp[col] += c * gh[col];
            acc += prow[col] * gh[col];
          }
          gc[a] = acc;
        }
        const Vec& u = cache.inputs[j];
        Vec gu(config_.dim, 0.0);
        for (std::size_t f = 0; f < n; ++f) {
          const std::size_t row = j * n + f;
          const auto w = filters_.row(row);
          double* gw = grads.filters.data() + row * l;
          for (std::size_t t = 0; t < q; ++t) {
            const double g = gc[f * q + t];
            if (g == 0.0) continue;
            for (std::size_t v = 0; v < l; ++v) {
              gw[v] += g * u[t * s + v];
              gu[t * s + v] += g * w[v];
            }
          }
        }
        add_entity_grad(j, gu, 0);
      }
      break;
    }
    case ModelKind::RSimplE: break;
  }
}

double Model::score(const Fact& fact) const {
  TupleCache cache;
  return forward(fact, cache);
}

double Model::score(const Fact& fact, const EntityOverride& ov) const {
  TupleCache cache;
  return forward(fact, cache, {}, &ov);
}

Gradients Model::score_gradients(const Fact& fact) const {
  TupleCache cache;
  forward(fact, cache);
  Gradients grads;
  backward(cache, 1.0, grads);
  return grads;
}

std::vector<std::span<double>> Model::parameter_blocks() {
  return {entities_.values(), relations_.values(), filters_.values(), projection_.values()};
}

std::size_t Model::parameter_count() const noexcept {
  return entities_.size() + relations_.size() + filters_.size() + projection_.size();
}

Vec flatten(const Gradients& grads, const Model& model) {
  Vec out(model.parameter_count(), 0.0);
  const std::size_t ew = model.entities().cols();
  const std::size_t rw = model.relations().cols();
  const std::size_t e_size = model.entities().size();
  const std::size_t r_size = model.relations().size();
  for (const auto& [id, g] : grads.entities) {
    if (id >= model.entities().rows()) continue;
    std::copy(g.begin(), g.end(), out.begin() + static_cast<std::ptrdiff_t>(id * ew));
  }
  for (const auto& [id, g] : grads.relations) {
    std::copy(g.begin(), g.end(), out.begin() + static_cast<std::ptrdiff_t>(e_size + id * rw));
  }
  const std::size_t f_off = e_size + r_size;
  std::copy(grads.filters.begin(), grads.filters.end(),
            out.begin() + static_cast<std::ptrdiff_t>(f_off));
  std::copy(grads.projection.begin(), grads.projection.end(),
            out.begin() + static_cast<std::ptrdiff_t>(f_off + model.filters().size()));
  return out;
}

}  // namespace hypekit
