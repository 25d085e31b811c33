#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hypekit/checkpoint.hpp"
#include "hypekit/conversions.hpp"
#include "hypekit/data.hpp"
#include "hypekit/error.hpp"
#include "hypekit/evaluation.hpp"
#include "hypekit/expressivity.hpp"
#include "hypekit/mathkernel.hpp"
#include "hypekit/models.hpp"
#include "hypekit/training.hpp"

namespace py = pybind11;
using namespace hypekit;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  auto v = m.values();
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

void from_numpy(Matrix& m, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != m.rows() ||
      static_cast<std::size_t>(a.shape(1)) != m.cols()) {
    throw DimensionError("array shape does not match the parameter block");
  }
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
}

std::vector<std::span<const double>> spans(const std::vector<Vec>& vs) {
  return {vs.begin(), vs.end()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge hypergraph embeddings";

  static py::exception<Error> base(m, "Error", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ArityError>(m, "ArityError", base.ptr());
  py::register_exception<PositionError>(m, "PositionError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<MalformedGroupError>(m, "MalformedGroupError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
  py::register_exception<EmptyReportError>(m, "EmptyReportError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

  m.def("dotsum", [](const std::vector<Vec>& vs) { return dotsum(spans(vs)); }, py::arg("vectors"));
  m.def("circshift", [](const Vec& v, std::size_t x) { return circshift(v, x); }, py::arg("v"),
        py::arg("shift"));
  m.def("conv1d", [](const Vec& v, const Vec& w, std::size_t s) { return conv1d(v, w, s); },
        py::arg("v"), py::arg("w"), py::arg("stride"));

  py::class_<Fact>(m, "Fact")
      .def(py::init<>())
      .def(py::init([](RelationId r, std::vector<EntityId> es) { return Fact{r, std::move(es)}; }),
           py::arg("relation"), py::arg("entities"))
      .def_readwrite("relation", &Fact::relation)
      .def_readwrite("entities", &Fact::entities)
      .def_property_readonly("arity", &Fact::arity)
      .def("__eq__", [](const Fact& a, const Fact& b) { return a == b; })
      .def("__hash__", [](const Fact& f) { return FactHash{}(f); })
      .def("__repr__", [](const Fact& f) {
        std::ostringstream s;
        s << "Fact(" << f.relation << ", [";
        for (std::size_t i = 0; i < f.arity(); ++i) s << (i ? ", " : "") << f.entities[i];
        s << "])";
        return s.str();
      });

  py::class_<Vocab>(m, "Vocab")
      .def(py::init<>())
      .def("add_entity", &Vocab::add_entity)
      .def("add_relation", &Vocab::add_relation)
      .def("find_entity", &Vocab::find_entity)
      .def("find_relation", &Vocab::find_relation)
      .def("arity", &Vocab::arity)
      .def_property_readonly("entity_names", &Vocab::entity_names)
      .def_property_readonly("relation_names", &Vocab::relation_names)
      .def_property_readonly("num_entities", &Vocab::num_entities)
      .def_property_readonly("num_relations", &Vocab::num_relations)
      .def_property_readonly("max_arity", &Vocab::max_arity)
      .def("hash", &Vocab::hash)
      .def("format", [](const Vocab& v, const Fact& f) { return format_fact(f, v); });

  m.def("parse_facts",
        [](const std::string& text, Vocab& vocab, bool allow_reserved) {
          return parse_facts(std::string_view(text), vocab, ParseOptions{allow_reserved});
        },
        py::arg("text"), py::arg("vocab"), py::arg("allow_reserved") = false);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("vocab", &Dataset::vocab)
      .def_readwrite("train", &Dataset::train)
      .def_readwrite("valid", &Dataset::valid)
      .def_readwrite("test", &Dataset::test)
      .def("validate", &Dataset::validate);
  m.def("load_dataset",
        [](const std::filesystem::path& dir, bool allow_reserved) {
          return load_dataset(dir, ParseOptions{allow_reserved});
        },
        py::arg("directory"), py::arg("allow_reserved") = false);
  m.def("missing_positions_subset", &missing_positions_subset);

  m.def("reify",
        [](const std::vector<Fact>& facts, Vocab vocab) {
          auto out = reify(facts, vocab);
          return py::make_tuple(out, vocab);
        },
        py::arg("facts"), py::arg("vocab"), "Returns (triples, extended vocab).");
  m.def("star_to_clique",
        [](const std::vector<Fact>& facts, Vocab vocab) {
          auto out = star_to_clique(facts, vocab);
          return py::make_tuple(out, vocab);
        },
        py::arg("facts"), py::arg("vocab"));
  m.def("inverse_reify",
        [](const std::vector<Fact>& triples, const Vocab& in_vocab, bool skip_bad) {
          Vocab out_vocab;
          InverseReifyOptions o;
          o.skip_bad = skip_bad;
          auto r = inverse_reify(triples, in_vocab, out_vocab, o);
          return py::make_tuple(r.facts, out_vocab, r.malformed);
        },
        py::arg("triples"), py::arg("vocab"), py::arg("skip_bad") = false,
        "Returns (facts, vocab, malformed group messages).");

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](const std::string& kind, std::size_t num_entities, std::size_t num_relations,
                       std::size_t dim, std::size_t max_arity, std::size_t rel_dim,
                       std::size_t filters, std::size_t filter_len, std::size_t stride) {
             ModelConfig c;
             c.kind = parse_model_kind(kind);
             c.num_entities = num_entities;
             c.num_relations = num_relations;
             c.dim = dim;
             c.max_arity = max_arity;
             c.rel_dim = rel_dim;
             c.filters = filters;
             c.filter_len = filter_len;
             c.stride = stride;
             return c;
           }),
           py::arg("kind"), py::arg("num_entities") = 0, py::arg("num_relations") = 0, py::arg("dim") = 200,
           py::arg("max_arity") = 2, py::arg("rel_dim") = 0, py::arg("filters") = 2,
           py::arg("filter_len") = 2, py::arg("stride") = 2)
      .def_property_readonly("kind", [](const ModelConfig& c) { return std::string(to_string(c.kind)); })
      .def_readonly("num_entities", &ModelConfig::num_entities)
      .def_readonly("num_relations", &ModelConfig::num_relations)
      .def_readonly("dim", &ModelConfig::dim)
      .def_property_readonly("rel_dim", &ModelConfig::relation_dim)
      .def_readonly("max_arity", &ModelConfig::max_arity)
      .def_readonly("filters", &ModelConfig::filters)
      .def_readonly("filter_len", &ModelConfig::filter_len)
      .def_readonly("stride", &ModelConfig::stride);

  py::class_<Model>(m, "Model")
      .def(py::init<const ModelConfig&>())
      .def("initialize",
           [](Model& model, std::uint64_t seed, double std) {
             Rng rng(seed);
             model.initialize(rng, std);
           },
           py::arg("seed") = 0, py::arg("std") = 0.01)
      .def_property_readonly("config", &Model::config)
      .def("score", py::overload_cast<const Fact&>(&Model::score, py::const_))
      .def("position_vector", &Model::position_vector)
      .def_property("entities", [](const Model& x) { return to_numpy(x.entities()); },
                    [](Model& x, const py::array_t<double>& a) { from_numpy(x.entities(), a); })
      .def_property("relations", [](const Model& x) { return to_numpy(x.relations()); },
                    [](Model& x, const py::array_t<double>& a) { from_numpy(x.relations(), a); })
      .def_property("filters", [](const Model& x) { return to_numpy(x.filters()); },
                    [](Model& x, const py::array_t<double>& a) { from_numpy(x.filters(), a); })
      .def_property("projection", [](const Model& x) { return to_numpy(x.projection()); },
                    [](Model& x, const py::array_t<double>& a) { from_numpy(x.projection(), a); });

  const TrainingConfig td;
  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init([](std::size_t nr, double lr, double dropout, std::size_t epochs,
                       std::size_t batch, std::size_t eval_every, std::uint64_t seed,
                       double init_std, std::size_t threads) {
             TrainingConfig c;
             c.negative_ratio = nr;
             c.learning_rate = lr;
             c.dropout = dropout;
             c.epochs = epochs;
             c.batch_size = batch;
             c.eval_every = eval_every;
             c.seed = seed;
             c.init_std = init_std;
             c.threads = threads;
             return c;
           }),
           py::kw_only(), py::arg("negative_ratio") = td.negative_ratio,
           py::arg("learning_rate") = td.learning_rate, py::arg("dropout") = td.dropout,
           py::arg("epochs") = td.epochs, py::arg("batch_size") = td.batch_size,
           py::arg("eval_every") = td.eval_every, py::arg("seed") = td.seed,
           py::arg("init_std") = td.init_std, py::arg("threads") = td.threads)
      .def_readwrite("negative_ratio", &TrainingConfig::negative_ratio)
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("dropout", &TrainingConfig::dropout)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("batch_size", &TrainingConfig::batch_size)
      .def_readwrite("eval_every", &TrainingConfig::eval_every)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("init_std", &TrainingConfig::init_std)
      .def_readwrite("threads", &TrainingConfig::threads);

  m.def("train",
        [](const Dataset& ds, const ModelConfig& base, const TrainingConfig& tc) {
          const ModelConfig mc = resolve_model_config(base, ds);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train(ds, mc, tc);
          }
          std::vector<py::tuple> log;
          for (const auto& e : r.log) {
            log.push_back(py::make_tuple(e.epoch, e.train_loss,
                                         e.valid_mrr ? py::cast(*e.valid_mrr) : py::none()));
          }
          return py::make_tuple(r.model, r.model_vocab, log);
        },
        py::arg("dataset"), py::arg("config"), py::arg("training"),
        "Returns (model, model vocab, [(epoch, loss, valid_mrr or None)]). Entity, relation "
        "and arity counts in `config` are taken from the dataset.");

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("tasks", &Metrics::tasks)
      .def_readonly("mrr", &Metrics::mrr)
      .def_readonly("hit1", &Metrics::hit1)
      .def_readonly("hit3", &Metrics::hit3)
      .def_readonly("hit10", &Metrics::hit10);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("overall", &EvalReport::overall)
      .def_readonly("per_arity", &EvalReport::per_arity)
      .def_readonly("num_facts", &EvalReport::num_facts)
      .def("to_tsv", &format_report_tsv)
      .def("to_json", &format_report_json);
  m.def("evaluate",
        [](const Model& model, const std::vector<Fact>& test, const std::vector<Fact>& known,
           std::size_t threads) {
          const FactSet k(known.begin(), known.end());
          py::gil_scoped_release release;
          return evaluate(model, test, k, threads);
        },
        py::arg("model"), py::arg("test"), py::arg("known"), py::arg("threads") = 0);

  py::class_<World>(m, "World")
      .def(py::init([](std::size_t n, std::vector<std::size_t> arities, std::vector<Fact> facts) {
             World w{n, std::move(arities), std::move(facts)};
             w.validate();
             return w;
           }),
           py::arg("num_entities"), py::arg("arities"), py::arg("facts"))
      .def_readonly("num_entities", &World::num_entities)
      .def_readonly("arities", &World::arities)
      .def_readonly("facts", &World::facts);
  m.def("random_world",
        [](std::size_t entities, std::size_t relations, std::size_t max_arity, std::size_t facts,
           std::uint64_t seed) {
          Rng rng(seed);
          return random_world({entities, relations, max_arity, facts}, rng);
        },
        py::arg("entities"), py::arg("relations"), py::arg("max_arity"), py::arg("facts"),
        py::arg("seed") = 0);
  m.def("construct_hype", &construct_hype);
  m.def("construct_hsimple", &construct_hsimple);
  py::class_<SeparationReport>(m, "SeparationReport")
      .def_readonly("passed", &SeparationReport::passed)
      .def_readonly("dimension", &SeparationReport::dimension)
      .def_readonly("tuples_checked", &SeparationReport::tuples_checked)
      .def_readonly("violations", &SeparationReport::violations)
      .def_readonly("first_violator", &SeparationReport::first_violator)
      .def("__str__", [](const SeparationReport& r) { return r.summary(); });
  m.def("verify_separation", &verify_separation, py::arg("model"), py::arg("world"),
        py::arg("bound") = 1'000'000, py::arg("tolerance") = 1e-9);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init([](Model model, Vocab vocab, std::uint64_t seed, const std::string& precision) {
             return Checkpoint{std::move(model), std::move(vocab), seed, parse_precision(precision)};
           }),
           py::arg("model"), py::arg("vocab"), py::arg("seed") = 0, py::arg("precision") = "f32")
      .def_readonly("model", &Checkpoint::model)
      .def_readonly("vocab", &Checkpoint::vocab)
      .def_readonly("seed", &Checkpoint::seed);
  m.def("save_checkpoint",
        py::overload_cast<const std::filesystem::path&, const Checkpoint&>(&save_checkpoint));
  m.def("load_checkpoint", py::overload_cast<const std::filesystem::path&>(&load_checkpoint));
}
