#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "hypekit/checkpoint.hpp"
#include "hypekit/conversions.hpp"
#include "hypekit/data.hpp"
#include "hypekit/error.hpp"
#include "hypekit/evaluation.hpp"
#include "hypekit/expressivity.hpp"
#include "hypekit/models.hpp"
#include "hypekit/training.hpp"

namespace fs = std::filesystem;

namespace hypekit::cli {
namespace {

constexpr const char* kSplits[] = {"train", "valid", "test"};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct TrainFlags {
  std::string model = "hype";
  std::string data;
  std::size_t dim = 200;
  std::size_t rel_dim = 0;
  double lr = 0.1;
  std::size_t nr = 10;
  double dropout = 0.0;
  std::size_t epochs = 500;
  std::size_t batch = 128;
  std::size_t filters = 2;
  std::size_t flen = 2;
  std::size_t stride = 2;
  std::uint64_t seed = 0;
  std::string out = "model.ckpt";
  std::string log;
  std::size_t eval_every = 50;
  std::string precision = "f32";
  std::size_t threads = 0;
  double init_std = 0.01;
  std::size_t aux_steps = 100;
  bool allow_reserved = false;
  bool dry_run = false;
};

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  bool missing_positions = false;
  std::string out;
  std::size_t threads = 0;
  std::size_t aux_steps = 100;
  double lr = 0.1;
  std::size_t nr = 10;
  bool allow_reserved = false;
};

struct ConvertFlags {
  std::string mode;
  std::string data;
  std::string out;
  bool skip_bad = false;
  bool keep_numeric = false;
  bool allow_reserved = false;
  std::string aux_prefix = std::string(kAuxPrefix);
  std::string position_infix = "__pos";
  std::string entity_allowlist;
  std::string relation_allowlist;
};

struct SplitFlags {
  std::string data;
  std::string out;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  bool missing_positions = false;
  bool allow_reserved = false;
};

struct ExpressivityFlags {
  std::string world;
  bool random = false;
  std::size_t entities = 5;
  std::size_t relations = 3;
  std::size_t max_arity = 4;
  std::size_t facts = 8;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  bool tamper = false;
  std::size_t bound = 1'000'000;
  std::string out;
  std::string checkpoint;
};

void print_model_config(std::ostream& out, const ModelConfig& mc) {
  out << "model\t" << to_string(mc.kind) << '\n'
      << "entities\t" << mc.num_entities << '\n'
      << "relations\t" << mc.num_relations << '\n'
      << "max_arity\t" << mc.max_arity << '\n'
      << "dim\t" << mc.dim << '\n'
      << "rel_dim\t" << mc.relation_dim() << '\n';
  if (mc.kind == ModelKind::HypE) {
    out << "filters\t" << mc.filters << '\n'
        << "filter_len\t" << mc.filter_len << '\n'
        << "stride\t" << mc.stride << '\n';
  }
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  ModelConfig base;
  base.kind = parse_model_kind(f.model);
  base.dim = f.dim;
  base.rel_dim = f.rel_dim;
  base.filters = f.filters;
  base.filter_len = f.flen;
  base.stride = f.stride;

  TrainingConfig tc;
  tc.negative_ratio = f.nr;
  tc.learning_rate = f.lr;
  tc.dropout = f.dropout;
  tc.epochs = f.epochs;
  tc.batch_size = f.batch;
  tc.eval_every = f.eval_every;
  tc.seed = f.seed;
  tc.init_std = f.init_std;
  tc.aux_steps = f.aux_steps;
  tc.threads = f.threads;
  tc.validate();
  const Precision precision = parse_precision(f.precision);

  ModelConfig mc = base;
  std::optional<Dataset> ds;
  if (!f.data.empty()) {
    ds = load_dataset(f.data, {.allow_reserved = f.allow_reserved});
    mc = resolve_model_config(base, *ds);
    mc.validate();
  } else if (!f.dry_run) {
    err << "error: train needs --data\n";
    return 2;
  }

  if (f.dry_run) {
    print_model_config(out, mc);
    out << "negative_ratio\t" << tc.negative_ratio << '\n'
        << "learning_rate\t" << tc.learning_rate << '\n'
        << "dropout\t" << tc.dropout << '\n'
        << "epochs\t" << tc.epochs << '\n'
        << "batch_size\t" << tc.batch_size << '\n'
        << "eval_every\t" << tc.eval_every << '\n'
        << "seed\t" << tc.seed << '\n'
        << "precision\t" << to_string(precision) << '\n';
    return 0;
  }

  const std::string log_path = f.log.empty() ? f.out + ".log" : f.log;
  std::ofstream log(log_path);
  if (!log) throw Error("cannot open " + log_path);
  const auto on_epoch = [&](const EpochLog& e) {
    log << e.epoch << '\t' << fixed(e.train_loss) << '\t'
        << (e.valid_mrr ? fixed(*e.valid_mrr) : std::string("-")) << '\n';
    if (e.valid_mrr) {
      out << "epoch " << e.epoch << " loss " << fixed(e.train_loss) << " valid_mrr "
          << fixed(*e.valid_mrr) << '\n';
    }
  };
  TrainResult res = train(*ds, mc, tc, on_epoch);
  save_checkpoint(fs::path(f.out), Checkpoint{res.model, res.model_vocab, f.seed, precision});
  out << "best epoch " << res.best_epoch;
  if (res.best_valid_mrr) out << " valid_mrr " << fixed(*res.best_valid_mrr);
  out << "\nwrote " << f.out << " and " << log_path << '\n';
  return 0;
}

int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream& /*err*/) {
  const Checkpoint ck = load_checkpoint(fs::path(f.checkpoint));
  const Dataset ds = load_dataset(f.data, {.allow_reserved = f.allow_reserved});
  const bool reified = ck.model.config().kind == ModelKind::RSimplE;
  const Vocab expected = reified ? reify_for_training(ds).vocab : ds.vocab;
  const Model model = align_to_vocab(ck, expected);

  std::vector<Fact> facts = f.split == "train" ? ds.train : f.split == "valid" ? ds.valid : ds.test;
  if (f.missing_positions) facts = missing_positions_subset(ds.train, facts);
  const FactSet known = ds.all_facts();

  EvalReport report;
  if (reified) {
    AuxFitConfig fit;
    fit.steps = f.aux_steps;
    fit.learning_rate = f.lr;
    fit.negative_ratio = f.nr;
    report = evaluate_reified(model, ds.vocab, expected, facts, known, fit, ck.seed, f.threads);
  } else {
    report = evaluate(model, facts, known, f.threads);
  }
  out << "evaluated " << report.num_facts << " facts (" << report.overall.tasks << " tasks)\n"
      << format_report_tsv(report);
  if (!f.out.empty()) {
    std::ofstream file(f.out);
    if (!file) throw Error("cannot open " + f.out);
    file << (fs::path(f.out).extension() == ".json" ? format_report_json(report)
                                                    : format_report_tsv(report));
  }
  return 0;
}

int cmd_convert(const ConvertFlags& f, std::ostream& out, std::ostream& err) {
  const bool unreify = f.mode == "unreify";
  ParseOptions opts{.allow_reserved = f.allow_reserved || unreify};
  Vocab in_vocab;
  std::vector<std::pair<std::string, std::vector<Fact>>> splits;
  for (const char* name : kSplits) {
    const fs::path p = fs::path(f.data) / (std::string(name) + ".txt");
    if (fs::exists(p)) splits.emplace_back(name, read_fact_file(p, in_vocab, opts));
  }
  if (splits.empty()) throw DataError("no train/valid/test files under " + f.data);

  Vocab out_vocab = unreify ? Vocab{} : in_vocab;
  std::vector<std::vector<Fact>> converted;
  std::vector<std::string> malformed;
  std::size_t unary = 0, numeric = 0, singleton = 0;
  for (auto& [name, facts] : splits) {
    if (f.mode == "reify") {
      converted.push_back(reify(facts, out_vocab));
    } else if (f.mode == "clique") {
      converted.push_back(star_to_clique(facts, out_vocab));
    } else {
      InverseReifyOptions io;
      const std::string prefix = f.aux_prefix;
      io.is_aux = [prefix](std::string_view n) { return n.starts_with(prefix); };
      io.skip_bad = true;
      io.drop_numeric = !f.keep_numeric;
      io.position_infix = f.position_infix;
      auto r = inverse_reify(facts, in_vocab, out_vocab, io);
      unary += r.dropped_unary;
      numeric += r.dropped_numeric;
      singleton += r.dropped_singleton_groups;
      for (auto& m : r.malformed) malformed.push_back(name + ": " + m);
      converted.push_back(std::move(r.facts));
    }
  }
  if (!malformed.empty()) {
    for (const auto& m : malformed) err << "malformed group: " << m << '\n';
    if (!f.skip_bad) {
      err << "error: " << malformed.size() << " malformed groups (use --skip-bad to drop them)\n";
      return 1;
    }
  }

  std::optional<NameSet> ent_allow, rel_allow;
  if (!f.entity_allowlist.empty()) ent_allow = read_allowlist(fs::path(f.entity_allowlist));
  if (!f.relation_allowlist.empty()) rel_allow = read_allowlist(fs::path(f.relation_allowlist));

  fs::create_directories(f.out);
  for (std::size_t i = 0; i < splits.size(); ++i) {
    auto& facts = converted[i];
    if (ent_allow || rel_allow) {
      facts = filter_by_allowlist(facts, out_vocab, ent_allow ? &*ent_allow : nullptr,
                                  rel_allow ? &*rel_allow : nullptr);
    }
    write_fact_file(fs::path(f.out) / (splits[i].first + ".txt"), facts, out_vocab);
    out << splits[i].first << "\tfacts " << splits[i].second.size() << " -> " << facts.size()
        << '\n';
  }
  out << "entities\t" << in_vocab.num_entities() << " -> " << out_vocab.num_entities() << '\n'
      << "relations\t" << in_vocab.num_relations() << " -> " << out_vocab.num_relations()
      << '\n';
  if (unreify) {
    out << "dropped\tunary " << unary << " numeric " << numeric << " singleton_groups "
        << singleton << " malformed " << malformed.size() << '\n';
  }
  return 0;
}

int cmd_split(const SplitFlags& f, std::ostream& out, std::ostream& /*err*/) {
  if (f.valid_fraction < 0 || f.test_fraction < 0 || f.valid_fraction + f.test_fraction >= 1) {
    throw ConfigError("split fractions must be non-negative and sum to less than 1");
  }
  Dataset ds;
  const auto raw = read_fact_file(f.data, ds.vocab, {.allow_reserved = f.allow_reserved});
  std::vector<Fact> facts;
  FactSet seen;
  for (const auto& fact : raw) {
    if (seen.insert(fact).second) facts.push_back(fact);
  }
  auto [rest, test] = holdout_split(facts, f.test_fraction, f.seed);
  const double valid_share = f.valid_fraction / (1.0 - f.test_fraction);
  auto [train, valid] = holdout_split(rest, valid_share, f.seed + 1);
  ds.train = std::move(train);
  ds.valid = std::move(valid);
  ds.test = std::move(test);
  save_dataset(f.out, ds);
  out << "facts\t" << raw.size() << " (" << raw.size() - facts.size() << " duplicates dropped)\n"
      << "train\t" << ds.train.size() << "\nvalid\t" << ds.valid.size() << "\ntest\t"
      << ds.test.size() << '\n';
  if (f.missing_positions) {
    const auto subset = missing_positions_subset(ds.train, ds.test);
    write_fact_file(fs::path(f.out) / "test_missing.txt", subset, ds.vocab);
    out << "test_missing\t" << subset.size() << '\n';
  }
  return 0;
}

struct NamedWorld {
  World world;
  Vocab vocab;
};

NamedWorld named_random_world(const RandomWorldSpec& spec, Rng& rng) {
  NamedWorld nw{random_world(spec, rng), {}};
  for (std::size_t e = 0; e < nw.world.num_entities; ++e) nw.vocab.add_entity("e" + std::to_string(e));
  for (std::size_t r = 0; r < nw.world.arities.size(); ++r) {
    nw.vocab.add_relation("r" + std::to_string(r), nw.world.arities[r]);
  }
  return nw;
}

void tamper(Model& m, const World& w, std::ostream& err) {
  if (w.facts.empty()) {
    err << "tamper: world has no facts, nothing to perturb\n";
    return;
  }
  m.relations()(w.facts.front().relation, 0) += 0.5;
}

int cmd_expressivity(const ExpressivityFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<NamedWorld> worlds;
  if (!f.world.empty()) {
    NamedWorld nw;
    const auto facts = read_fact_file(f.world, nw.vocab, {.allow_reserved = true});
    nw.world = world_from_facts(nw.vocab, facts);
    worlds.push_back(std::move(nw));
  } else if (f.random) {
    Rng rng(f.seed);
    const RandomWorldSpec spec{f.entities, f.relations, f.max_arity, f.facts};
    for (std::size_t t = 0; t < f.trials; ++t) worlds.push_back(named_random_world(spec, rng));
  } else {
    err << "error: expressivity needs --world or --random\n";
    return 2;
  }
  for (const auto& nw : worlds) {
    if (enumeration_count(nw.world) > f.bound) {
      throw ConfigError("world needs " + std::to_string(enumeration_count(nw.world)) +
                        " tuples, above the bound " + std::to_string(f.bound));
    }
  }

  struct Route {
    std::string name;
    std::function<Model(const NamedWorld&)> build;
  };
  std::vector<Route> routes;
  if (!f.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(fs::path(f.checkpoint));
    routes.push_back({"checkpoint", [ck](const NamedWorld& nw) { return align_to_vocab(ck, nw.vocab); }});
  } else {
    routes.push_back({"hype", [](const NamedWorld& nw) { return construct_hype(nw.world); }});
    routes.push_back({"hsimple", [](const NamedWorld& nw) { return construct_hsimple(nw.world); }});
  }

  bool all_pass = true;
  for (const auto& route : routes) {
    std::size_t passed = 0;
    std::optional<std::string> first_failure;
    for (std::size_t t = 0; t < worlds.size(); ++t) {
      Model m = route.build(worlds[t]);
      if (f.tamper) tamper(m, worlds[t].world, err);
      const auto rep = verify_separation(m, worlds[t].world, f.bound);
      if (rep.passed) ++passed;
      if (worlds.size() == 1) out << route.name << '\t' << rep.summary(&worlds[t].vocab) << '\n';
      if (!rep.passed && !first_failure) {
        first_failure = "trial " + std::to_string(t + 1) + ": " + rep.summary(&worlds[t].vocab);
      }
      if (!f.out.empty() && route.name != "checkpoint") {
        fs::path dir = worlds.size() == 1 ? fs::path(f.out)
                                          : fs::path(f.out) / ("trial-" + std::to_string(t + 1));
        fs::create_directories(dir);
        write_fact_file(dir / "world.txt", worlds[t].world.facts, worlds[t].vocab);
        save_checkpoint(dir / (route.name + ".ckpt"),
                        Checkpoint{m, worlds[t].vocab, f.seed, Precision::F64});
      }
    }
    if (worlds.size() > 1) {
      out << route.name << '\t' << passed << '/' << worlds.size() << " worlds pass\n";
      if (first_failure) out << route.name << "\tfirst failure " << *first_failure << '\n';
    }
    all_pass = all_pass && passed == worlds.size();
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge hypergraph embedding and link prediction", "hypekit"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint and log");
  train_cmd->add_option("--model", tf.model, "hype, hsimple, m-distmult, m-cp or r-simple")
      ->capture_default_str();
  train_cmd->add_option("--data", tf.data, "Dataset directory (train.txt, valid.txt, test.txt)");
  train_cmd->add_option("--dim", tf.dim, "Entity embedding size d")->capture_default_str();
  train_cmd->add_option("--rel-dim", tf.rel_dim, "HypE relation size d_r (0: same as d)")
      ->capture_default_str();
  train_cmd->add_option("--lr", tf.lr, "Adagrad learning rate")->capture_default_str();
  train_cmd->add_option("--nr", tf.nr, "Negative ratio N")->capture_default_str();
  train_cmd->add_option("--dropout", tf.dropout, "Dropout probability")->capture_default_str();
  train_cmd->add_option("--epochs", tf.epochs)->capture_default_str();
  train_cmd->add_option("--batch", tf.batch, "Positives per batch")->capture_default_str();
  train_cmd->add_option("--filters", tf.filters, "HypE filters per position n")->capture_default_str();
  train_cmd->add_option("--flen", tf.flen, "HypE filter length l")->capture_default_str();
  train_cmd->add_option("--stride", tf.stride, "HypE stride s")->capture_default_str();
  train_cmd->add_option("--seed", tf.seed)->capture_default_str();
  train_cmd->add_option("--out", tf.out, "Checkpoint path")->capture_default_str();
  train_cmd->add_option("--log", tf.log, "Training log path (default: <out>.log)");
  train_cmd->add_option("--eval-every", tf.eval_every, "Validation interval in epochs")
      ->capture_default_str();
  train_cmd->add_option("--precision", tf.precision, "Checkpoint payload: f32 or f64")
      ->capture_default_str();
  train_cmd->add_option("--threads", tf.threads, "Validation threads (0: all cores)")
      ->capture_default_str();
  train_cmd->add_option("--init-std", tf.init_std, "Initial parameter standard deviation")
      ->capture_default_str();
  train_cmd->add_option("--aux-steps", tf.aux_steps, "r-simple validation fitting steps")
      ->capture_default_str();
  train_cmd->add_flag("--allow-reserved", tf.allow_reserved, "Accept names containing \"__\"");
  train_cmd->add_flag("--dry-run", tf.dry_run, "Print the resolved configuration and exit");

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "Filtered MRR and Hit@{1,3,10} of a checkpoint");
  eval_cmd->add_option("--checkpoint", ef.checkpoint)->required();
  eval_cmd->add_option("--data", ef.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", ef.split)
      ->check(CLI::IsMember({"train", "valid", "test"}))
      ->capture_default_str();
  eval_cmd->add_flag("--missing-positions", ef.missing_positions,
                     "Only facts with an (entity, position) pair unseen in train");
  eval_cmd->add_option("--out", ef.out, "Report file (.json for JSON, otherwise TSV)");
  eval_cmd->add_option("--threads", ef.threads)->capture_default_str();
  eval_cmd->add_option("--aux-steps", ef.aux_steps, "r-simple auxiliary fitting steps")
      ->capture_default_str();
  eval_cmd->add_option("--lr", ef.lr, "r-simple auxiliary fitting learning rate")
      ->capture_default_str();
  eval_cmd->add_option("--nr", ef.nr, "r-simple auxiliary fitting negative ratio")
      ->capture_default_str();
  eval_cmd->add_flag("--allow-reserved", ef.allow_reserved);

  ConvertFlags cf;
  auto* convert_cmd = app.add_subcommand("convert", "Reify, star-to-clique or unreify a dataset");
  convert_cmd->add_option("--mode", cf.mode)
      ->required()
      ->check(CLI::IsMember({"reify", "clique", "unreify"}));
  convert_cmd->add_option("--data", cf.data, "Input dataset directory")->required();
  convert_cmd->add_option("--out", cf.out, "Output dataset directory")->required();
  convert_cmd->add_flag("--skip-bad", cf.skip_bad, "Drop malformed groups instead of failing");
  convert_cmd->add_flag("--keep-numeric", cf.keep_numeric, "Keep facts with numeric entities");
  convert_cmd->add_flag("--allow-reserved", cf.allow_reserved);
  convert_cmd->add_option("--aux-prefix", cf.aux_prefix, "Auxiliary entity prefix (unreify)")
      ->capture_default_str();
  convert_cmd->add_option("--position-infix", cf.position_infix,
                          "Separator before the position number (unreify)")
      ->capture_default_str();
  convert_cmd->add_option("--entity-allowlist", cf.entity_allowlist);
  convert_cmd->add_option("--relation-allowlist", cf.relation_allowlist);

  SplitFlags sf;
  auto* split_cmd = app.add_subcommand("split", "Split one fact file into train/valid/test");
  split_cmd->add_option("--data", sf.data, "Fact file")->required();
  split_cmd->add_option("--out", sf.out, "Output dataset directory")->required();
  split_cmd->add_option("--valid-fraction", sf.valid_fraction)->capture_default_str();
  split_cmd->add_option("--test-fraction", sf.test_fraction)->capture_default_str();
  split_cmd->add_option("--seed", sf.seed)->capture_default_str();
  split_cmd->add_flag("--missing-positions", sf.missing_positions, "Also write test_missing.txt");
  split_cmd->add_flag("--allow-reserved", sf.allow_reserved);

  ExpressivityFlags xf;
  auto* expr_cmd =
      app.add_subcommand("expressivity", "Check the exact-separation constructions on a world");
  expr_cmd->add_option("--world", xf.world, "Fact file listing the true tuples");
  expr_cmd->add_flag("--random", xf.random, "Use random worlds");
  expr_cmd->add_option("--entities", xf.entities)->capture_default_str();
  expr_cmd->add_option("--relations", xf.relations)->capture_default_str();
  expr_cmd->add_option("--max-arity", xf.max_arity)->capture_default_str();
  expr_cmd->add_option("--facts", xf.facts)->capture_default_str();
  expr_cmd->add_option("--trials", xf.trials)->capture_default_str();
  expr_cmd->add_option("--seed", xf.seed)->capture_default_str();
  expr_cmd->add_flag("--tamper", xf.tamper, "Perturb one relation coordinate before checking");
  expr_cmd->add_option("--bound", xf.bound, "Maximum tuples to enumerate")->capture_default_str();
  expr_cmd->add_option("--out", xf.out, "Write world.txt and checkpoints here");
  expr_cmd->add_option("--checkpoint", xf.checkpoint, "Verify this checkpoint instead");

  std::vector<std::string> store;
  store.reserve(args.size() + 1);
  store.emplace_back("hypekit");
  store.insert(store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(tf, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ef, out, err);
    if (convert_cmd->parsed()) return cmd_convert(cf, out, err);
    if (split_cmd->parsed()) return cmd_split(sf, out, err);
    return cmd_expressivity(xf, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hypekit::cli
