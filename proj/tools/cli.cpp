/*
 * Copyright 2026 The ghm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <utility>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "ghm/baselines.hpp"
#include "ghm/corpus.hpp"
#include "ghm/error.hpp"
#include "ghm/eval.hpp"
#include "ghm/geotree.hpp"
#include "ghm/model.hpp"
#include "ghm/polygon.hpp"
#include "ghm/synth.hpp"

namespace ghm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("UnknownPath", "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json(const std::string& path) {
    const auto text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("InvalidJson", path + ": " + e.what());
    }
}

/// Writes next to the target, then renames over it.
void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("UnknownPath", "cannot write '" + path + "'");
        }
        out << content;
        out.flush();
        if (!out) {
            throw Error("WriteFailed", "short write to '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("WriteFailed", "cannot move output into '" + path + "'");
    }
}

struct Context {
    std::ostream& out;
    std::shared_ptr<spdlog::logger> log;
    std::optional<std::uint64_t> seed_flag;
    std::size_t threads = 1;

    std::uint64_t seed() {
        if (!seed_flag) {
            std::random_device rd;
            seed_flag = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            log->info("no --seed given, drawn seed {}", *seed_flag);
        }
        return *seed_flag;
    }

    /// To `path` when set, else to stdout.
    void emit(const std::string& path, const std::string& content) {
        if (path.empty()) {
            out << content;
        } else {
            write_atomic(path, content);
            log->info("wrote {}", path);
        }
    }
};

NodeIndex resolve_leaf(const GeoTree& tree, const std::string& id) {
    const auto node = tree.index_of(id);
    tree.leaf_position(node);  // throws NotALeaf
    return node;
}

struct EmFlags {
    EmConfig cfg;
    std::string init = std::string(init_mode_name(EmConfig{}.init));

    void attach(CLI::App* app) {
        app->add_option("--max-iterations", cfg.max_iterations, "EM iteration cap")->capture_default_str();
        app->add_option("--tolerance", cfg.tolerance, "relative log-likelihood tolerance")->capture_default_str();
        app->add_option("--alpha-smooth", cfg.alpha_smooth, "theta pseudo-count")->capture_default_str();
        app->add_option("--beta-smooth", cfg.beta_smooth, "pi pseudo-count")->capture_default_str();
        app->add_option("--init", init, "theta initialization")
            ->check(CLI::IsMember({"flat-leaves", "pooled"}))
            ->capture_default_str();
    }

    EmConfig resolve(std::uint64_t seed) const {
        EmConfig out = cfg;
        out.init = parse_init_mode(init);
        out.seed = seed;
        return out;
    }
};

struct GenFlags {
    GenConfig cfg;
    std::string tree_path;
    std::vector<double> gamma{cfg.gamma_low, cfg.gamma_high};

    void attach(CLI::App* app) {
        app->add_option("--tree", tree_path, "tree JSON (default: 68-node reference tree)");
        app->add_option("--vocab-size", cfg.vocab_size, "number of tags T")->capture_default_str();
        app->add_option("--alpha", cfg.alpha, "Dirichlet concentration of theta")->capture_default_str();
        app->add_option("--beta", cfg.beta, "Dirichlet concentration of mixtures")->capture_default_str();
        app->add_option("--gamma", gamma, "gamma range LOW HIGH")->expected(2)->capture_default_str();
    }

    GenConfig resolve(std::uint64_t seed) const {
        GenConfig out = cfg;
        if (!tree_path.empty()) {
            out.tree = tree_from_json(read_json(tree_path));
        }
        out.gamma_low = gamma.at(0);
        out.gamma_high = gamma.at(1);
        out.seed = seed;
        return out;
    }
};

json posterior_json(const GhmModel& model, TagIndex t, NodeIndex leaf) {
    const auto& tree = model.tree();
    const auto post = model.posterior(t, leaf);
    const auto node = model.classify(t, leaf);
    auto levels = json::array();
    for (std::size_t k = 0; k < post.nodes.size(); ++k) {
        levels.push_back({{"node", tree.id(post.nodes[k])}, {"probability", post.probabilities[k]}});
    }
    return {{"tag", model.vocabulary().term(t)},
            {"leaf", tree.id(leaf)},
            {"node", tree.id(node)},
            {"level", level_of(tree, node)},
            {"probability", model.tag_probability(t, leaf)},
            {"posterior", std::move(levels)}};
}

void emit_error(std::ostream& err, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto log = std::make_shared<spdlog::logger>("ghm", sink);
    log->set_pattern("[%l] %v");
    Context ctx{out, log, std::nullopt, 1};

    CLI::App app{"Geographical hierarchy model: ingest, train, query and evaluate", "ghm"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    std::string level = "info";
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (default: drawn from entropy and logged)");
    app.add_option("--threads", ctx.threads, "worker cap")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--log-level", level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();

    std::vector<std::pair<CLI::App*, std::function<void()>>> commands;

    // ingest
    {
        auto* cmd = app.add_subcommand("ingest", "records -> vocabulary, counts and stats");
        auto o = std::make_shared<std::tuple<std::string, std::string, std::string, std::string,
                                             std::string, std::string, IngestConfig>>();
        auto& [records, tree_path, polygons, stoplist, out_path, stats_path, cfg] = *o;
        cmd->add_option("--records", records, "JSON-lines records")->required();
        cmd->add_option("--tree", tree_path, "tree JSON")->required();
        cmd->add_option("--polygons", polygons, "GeoJSON leaf polygons (leaf_id property)");
        cmd->add_option("--stoplist", stoplist, "stoplist, one term per line");
        cmd->add_option("--min-accuracy", cfg.min_accuracy, "drop records below this accuracy")->capture_default_str();
        cmd->add_option("--min-users", cfg.min_distinct_users, "drop tags with fewer distinct users")
            ->capture_default_str();
        cmd->add_option("--out", out_path, "counts JSON output")->required();
        cmd->add_option("--stats", stats_path, "stats JSON output (default: stdout)");
        commands.emplace_back(cmd, [&ctx, o] {
            auto& [records, tree_path, polygons, stoplist, out_path, stats_path, cfg] = *o;
            const auto tree = tree_from_json(read_json(tree_path));
            std::optional<RegionPolygons> regions;
            if (!polygons.empty()) {
                regions = RegionPolygons::from_geojson(read_json(polygons), &tree);
            }
            IngestConfig config = cfg;
            if (!stoplist.empty()) {
                std::istringstream in(read_file(stoplist));
                config.stoplist = read_stoplist(in);
            }
            std::istringstream in(read_file(records));
            const auto recs = read_records(in);
            const auto result = ingest(recs, tree, regions ? &*regions : nullptr, config);
            write_atomic(out_path, counts_to_json(result.vocabulary, result.counts).dump() + "\n");
            ctx.log->info("{} records in, {} kept, vocabulary {}", result.stats.records_in,
                          result.stats.records_kept, result.stats.vocabulary_size);
            ctx.emit(stats_path, stats_to_json(result.stats).dump(2) + "\n");
        });
    }

    // train
    {
        auto* cmd = app.add_subcommand("train", "fit the model by EM");
        auto o = std::make_shared<std::tuple<std::string, std::string, std::string, std::string, EmFlags>>();
        auto& [counts_path, tree_path, corpus_path, out_path, em] = *o;
        auto* counts_opt = cmd->add_option("--counts", counts_path, "counts JSON from ingest");
        auto* tree_opt = cmd->add_option("--tree", tree_path, "tree JSON");
        auto* corpus_opt = cmd->add_option("--corpus", corpus_path, "corpus from simulate (carries its tree)");
        counts_opt->needs(tree_opt);
        tree_opt->needs(counts_opt);
        corpus_opt->excludes(counts_opt);
        cmd->add_option("--out", out_path, "model JSON output")->required();
        em.attach(cmd);
        commands.emplace_back(cmd, [&ctx, o, cmd] {
            auto& [counts_path, tree_path, corpus_path, out_path, em] = *o;
            if (counts_path.empty() == corpus_path.empty()) {
                throw Error("UsageError", "train needs either --counts with --tree, or --corpus");
            }
            std::optional<GeoTree> tree;
            Vocabulary vocab;
            CountMatrix counts;
            if (!corpus_path.empty()) {
                std::istringstream in(read_file(corpus_path));
                auto corpus = read_corpus(in);
                tree = std::move(corpus.tree);
                vocab = Vocabulary::numbered(corpus.vocab_size);
                counts = std::move(corpus.counts);
            } else {
                tree = tree_from_json(read_json(tree_path));
                std::tie(vocab, counts) = counts_from_json(read_json(counts_path));
            }
            const auto model = train(counts, *tree, vocab, em.resolve(ctx.seed()));
            const auto& info = model.training();
            ctx.log->info("{} iterations, converged {}, log-likelihood {}", info.iterations, info.converged,
                          info.log_likelihood);
            write_atomic(out_path, model_to_json(model).dump() + "\n");
            ctx.out << json{{"iterations", info.iterations},
                            {"converged", info.converged},
                            {"log_likelihood", info.log_likelihood}}
                           .dump(2)
                    << '\n';
        });
    }

    // classify
    {
        auto* cmd = app.add_subcommand("classify", "hierarchy level of tags observed in a leaf");
        auto o = std::make_shared<std::tuple<std::string, std::string, std::vector<std::string>>>();
        auto& [model_path, leaf, tags] = *o;
        cmd->add_option("--model", model_path, "model JSON")->required();
        cmd->add_option("--leaf", leaf, "leaf id")->required();
        cmd->add_option("--tag,tags", tags, "tag terms")->required();
        commands.emplace_back(cmd, [&ctx, o] {
            auto& [model_path, leaf, tags] = *o;
            const auto model = model_from_json(read_json(model_path));
            const auto n = resolve_leaf(model.tree(), leaf);
            auto result = json::array();
            for (const auto& term : tags) {
                result.push_back(posterior_json(model, model.vocabulary().index_of(term), n));
            }
            ctx.out << result.dump(2) << '\n';
        });
    }

    // top-tags
    {
        auto* cmd = app.add_subcommand("top-tags", "most probable tags of a leaf with their levels");
        auto o = std::make_shared<std::tuple<std::string, std::string, std::size_t>>("", "", 10);
        auto& [model_path, leaf, k] = *o;
        cmd->add_option("--model", model_path, "model JSON")->required();
        cmd->add_option("--leaf", leaf, "leaf id")->required();
        cmd->add_option("-k,--k", k, "number of tags")->capture_default_str();
        commands.emplace_back(cmd, [&ctx, o] {
            auto& [model_path, leaf, k] = *o;
            const auto model = model_from_json(read_json(model_path));
            const auto& tree = model.tree();
            const auto n = resolve_leaf(tree, leaf);
            auto tags = json::array();
            for (const auto& r : model.top_tags(n, k)) {
                tags.push_back({{"tag", model.vocabulary().term(r.tag)},
                                {"probability", r.probability},
                                {"node", tree.id(r.node)},
                                {"level", level_of(tree, r.node)}});
            }
            ctx.out << json{{"leaf", leaf}, {"tags", std::move(tags)}}.dump(2) << '\n';
        });
    }

    // uniqueness
    {
        auto* cmd = app.add_subcommand("uniqueness", "leaf mixture weight of every leaf");
        auto o = std::make_shared<std::tuple<std::string, std::string, std::string>>();
        auto& [model_path, polygons, out_path] = *o;
        cmd->add_option("--model", model_path, "model JSON")->required();
        cmd->add_option("--polygons", polygons, "GeoJSON to annotate with a \"uniqueness\" property");
        cmd->add_option("--out", out_path, "output path (default: stdout)");
        commands.emplace_back(cmd, [&ctx, o] {
            auto& [model_path, polygons, out_path] = *o;
            const auto model = model_from_json(read_json(model_path));
            const auto& tree = model.tree();
            if (polygons.empty()) {
                auto rows = json::array();
                for (auto leaf : tree.leaves()) {
                    rows.push_back({{"leaf", tree.id(leaf)}, {"uniqueness", model.uniqueness(leaf)}});
                }
                ctx.emit(out_path, rows.dump(2) + "\n");
                return;
            }
            auto doc = read_json(polygons);
            RegionPolygons::from_geojson(doc, &tree);  // validates
            for (auto& feature : doc.at("features")) {
                const auto id = feature.at("properties").at("leaf_id").get<std::string>();
                feature["properties"]["uniqueness"] = model.uniqueness(tree.index_of(id));
            }
            ctx.emit(out_path, doc.dump(2) + "\n");
        });
    }

    // compare
    {
        auto* cmd = app.add_subcommand("compare", "similar leaves across two leaf sets");
        auto o = std::make_shared<std::tuple<std::string, std::vector<std::string>, std::vector<std::string>,
                                             std::size_t, std::size_t>>("", std::vector<std::string>{},
                                                                        std::vector<std::string>{}, 3, 5);
        auto& [model_path, from, to, k, common] = *o;
        cmd->add_option("--model", model_path, "model JSON")->required();
        cmd->add_option("--from", from, "source leaf ids")->required();
        cmd->add_option("--to", to, "target leaf ids")->required();
        cmd->add_option("-k,--k", k, "matches per source leaf")->capture_default_str();
        cmd->add_option("--common", common, "shared tags listed per match")->capture_default_str();
        commands.emplace_back(cmd, [&ctx, o] {
            auto& [model_path, from, to, k, common] = *o;
            const auto model = model_from_json(read_json(model_path));
            const auto& tree = model.tree();
            const auto& vocab = model.vocabulary();
            auto terms = [&](const std::vector<TagIndex>& tags) {
                std::vector<std::string> out;
                for (auto t : tags) {
                    out.push_back(vocab.term(t));
                }
                return out;
            };
            std::vector<NodeIndex> a, b;
            for (const auto& id : from) {
                a.push_back(resolve_leaf(tree, id));
            }
            for (const auto& id : to) {
                b.push_back(resolve_leaf(tree, id));
            }
            // A single pair is compared directly, even a leaf with itself.
            if (a.size() == 1 && b.size() == 1) {
                ctx.out << json{{"from", from[0]},
                                {"to", to[0]},
                                {"similarity", model.similarity(a[0], b[0])},
                                {"common_tags", terms(common_tags(model, a[0], b[0], common))}}
                               .dump(2)
                        << '\n';
                return;
            }
            auto result = json::array();
            for (const auto& mapping : map_regions(model, a, b, k, common)) {
                auto matches = json::array();
                for (const auto& m : mapping.matches) {
                    matches.push_back({{"to", tree.id(m.leaf)},
                                       {"similarity", m.similarity},
                                       {"common_tags", terms(m.common_tags)}});
                }
                result.push_back({{"from", tree.id(mapping.from)}, {"matches", std::move(matches)}});
            }
            ctx.out << result.dump(2) << '\n';
        });
    }

    // simulate
    {
        auto* cmd = app.add_subcommand("simulate", "generate a labeled synthetic corpus");
        auto o = std::make_shared<std::pair<std::string, GenFlags>>();
        cmd->add_option("--out", o->first, "corpus JSON-lines output")->required();
        o->second.attach(cmd);
        commands.emplace_back(cmd, [&ctx, o] {
            const auto gen = o->second.resolve(ctx.seed());
            const auto corpus = generate(gen);
            std::ostringstream buf;
            write_corpus(buf, corpus, gen);
            write_atomic(o->first, buf.str());
            ctx.out << json{{"seed", gen.seed},
                            {"leaves", corpus.instances.size()},
                            {"instances", corpus.counts.total()},
                            {"triples", corpus.triples.size()}}
                           .dump(2)
                    << '\n';
        });
    }

    // evaluate
    {
        auto* cmd = app.add_subcommand("evaluate", "accuracy of each method over generated corpora");
        struct Opts {
            EvalConfig cfg;
            GenFlags gen;
            EmFlags em;
            std::vector<std::string> methods{"random", "nb", "ht", "ghm"};
            double nb_smoothing = 0.0;
            std::string out_path;
        };
        auto o = std::make_shared<Opts>();
        cmd->add_option("--trials", o->cfg.trials, "generated corpora")->capture_default_str();
        cmd->add_option("--holdout", o->cfg.holdout, "test fraction of instances")->capture_default_str();
        cmd->add_option("--methods", o->methods, "subset of random, nb, ht, ghm")
            ->check(CLI::IsMember({"random", "nb", "ht", "ghm"}))
            ->capture_default_str();
        auto* nb = cmd->add_option("--nb-smoothing", o->nb_smoothing, "NB pseudo-count (default: --alpha-smooth)");
        cmd->add_option("--out", o->out_path, "report JSON output");
        o->gen.attach(cmd);
        o->em.attach(cmd);
        commands.emplace_back(cmd, [&ctx, o, nb] {
            EvalConfig cfg = o->cfg;
            cfg.seed = ctx.seed();
            cfg.gen = o->gen.resolve(0);
            cfg.em = o->em.resolve(0);
            cfg.threads = ctx.threads;
            cfg.methods.clear();
            for (const auto& m : o->methods) {
                cfg.methods.push_back(parse_method(m));
            }
            if (nb->count()) {
                cfg.nb_smoothing = o->nb_smoothing;
            }
            const auto report = run_eval(cfg);
            ctx.log->info("{} trials in {:.1f} s", report.trials, report.seconds);
            if (!o->out_path.empty()) {
                write_atomic(o->out_path, report_to_json(report).dump(2) + "\n");
            }
            ctx.out << report_table(report);
        });
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        emit_error(err, "UsageError", e.what());
        return input_error;
    }

    log->set_level(spdlog::level::from_str(level));
    if (seed_opt->count()) {
        ctx.seed_flag = seed;
    }
    try {
        for (auto& [cmd, action] : commands) {
            if (cmd->parsed()) {
                action();
            }
        }
    } catch (const NumericalError& e) {
        emit_error(err, e.code(), e.what());
        return numerical_error;
    } catch (const Error& e) {
        emit_error(err, e.code(), e.what());
        return input_error;
    } catch (const json::exception& e) {
        emit_error(err, "InvalidJson", e.what());
        return input_error;
    } catch (const std::exception& e) {
        emit_error(err, "InvalidInput", e.what());
        return input_error;
    }
    return ok;
}

}  // namespace ghm::cli
