// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "revopt/annotation.hpp"
#include "revopt/config.hpp"
#include "revopt/corpus_store.hpp"
#include "revopt/generator.hpp"
#include "revopt/judge.hpp"
#include "revopt/log.hpp"
#include "revopt/optimizer.hpp"
#include "revopt/parallel.hpp"
#include "revopt/prompts.hpp"
#include "revopt/rag.hpp"
#include "revopt/report.hpp"
#include "revopt/serialize.hpp"

namespace revopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<fs::path> config;
  bool verbose = false;
  bool quiet = false;
};

AppConfig configure(const Common& common, bool needs_backend) {
  if (common.verbose) logger()->set_level(spdlog::level::debug);
  if (common.quiet) logger()->set_level(spdlog::level::warn);
  AppConfig config = load_config(common.config);
  if (needs_backend) config.validate();
  return config;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out) throw Error(fmt::format("failed writing {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

template <class T>
std::vector<T> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("cannot open {}", path.string()));
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

ReviewSet select_reviews(const fs::path& path, const std::string& split) {
  const ReviewSet all = load_reviews(path);
  if (split == "all") return all;
  const Split s = *parse_split(split);
  if (s == Split::train && all.count(Split::train) == 0 && all.count(Split::test) == 0) {
    logger()->info("{} carries no split tags; using all {} reviews", path.string(), all.size());
    return all;
  }
  ReviewSet subset = all.subset(s);
  if (subset.empty()) throw PreconditionError(fmt::format("{} has no {} reviews", path.string(), split));
  return subset;
}

/// A template file path, or the name of a shipped prompt.
PromptTemplate resolve_prompt(const std::string& spec, const AppConfig& config) {
  PromptTemplate t;
  if (fs::exists(spec)) {
    t = load_template(spec);
    t.text = prompts::apply_app_identity(std::move(t.text), config.app);
  } else if (prompts::builtin().count(spec) > 0) {
    t.id = spec;
    t.text = prompts::load(spec, config.app, config.prompts_dir);
  } else {
    throw NotFoundError(fmt::format("prompt {} is neither a file nor a shipped prompt", spec));
  }
  validate_template(t.text);
  return t;
}

std::atomic<AnnotationServer*> g_server{nullptr};

extern "C" void handle_stop(int) {
  if (auto* s = g_server.load()) s->stop();
}

const std::vector<std::string> kSplits{"all", "train", "test"};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Review-response prompt optimisation toolkit", "revopt"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "Configuration file (JSON); defaults to $SCRABLE_CONFIG");
  app.add_flag("-v,--verbose", common.verbose, "Debug logging");
  app.add_flag("-q,--quiet", common.quiet, "Warnings and errors only");

  // index
  auto* index_cmd = app.add_subcommand("index", "Chunk and embed a knowledge directory");
  fs::path docs_dir, index_out;
  index_cmd->add_option("--docs", docs_dir, "Directory of .txt/.md documents")->required();
  index_cmd->add_option("--out", index_out, "Index file to write")->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Generate responses for reviews");
  fs::path reviews_path, index_path, responses_out;
  std::string prompt_spec = "base", split = "all";
  std::optional<std::string> prompt_id;
  gen_cmd->add_option("--reviews", reviews_path, "Reviews JSONL")->required();
  gen_cmd->add_option("--index", index_path, "Knowledge index")->required();
  gen_cmd->add_option("--prompt", prompt_spec, "Template file or shipped prompt name")->capture_default_str();
  gen_cmd->add_option("--prompt-id", prompt_id, "Override the template id");
  gen_cmd->add_option("--split", split, "Reviews to use")->check(CLI::IsMember(kSplits))->capture_default_str();
  gen_cmd->add_option("--out", responses_out, "Responses JSONL to write")->required();

  // judge
  auto* judge_cmd = app.add_subcommand("judge", "Score generated responses");
  fs::path responses_in, judged_out;
  judge_cmd->add_option("--reviews", reviews_path, "Reviews JSONL")->required();
  judge_cmd->add_option("--responses", responses_in, "Responses JSONL from generate")->required();
  judge_cmd->add_option("--out", judged_out, "Judged JSONL to write")->required();

  // optimize
  auto* opt_cmd = app.add_subcommand("optimize", "Run the prompt optimisation loop");
  std::string run_id = "run", select = "final", opt_split = "train";
  std::optional<fs::path> prompt_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iterations;
  opt_cmd->add_option("--reviews", reviews_path, "Reviews JSONL")->required();
  opt_cmd->add_option("--index", index_path, "Knowledge index")->required();
  opt_cmd->add_option("--prompt", prompt_spec, "Base template file or shipped prompt name")->capture_default_str();
  opt_cmd->add_option("--split", opt_split, "Reviews to optimise on")->check(CLI::IsMember(kSplits))->capture_default_str();
  opt_cmd->add_option("--run-id", run_id, "Run directory name")->capture_default_str();
  opt_cmd->add_option("--select", select, "Template to emit")->check(CLI::IsMember({"final", "best"}))->capture_default_str();
  opt_cmd->add_option("--seed", seed, "Overrides optimizer.seed");
  opt_cmd->add_option("--max-iterations", max_iterations, "Overrides optimizer.max_iterations");
  opt_cmd->add_option("--out", prompt_out, "Write the selected template text here");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare LLM and human scores");
  fs::path llm_path, human_path;
  std::optional<fs::path> report_out;
  eval_cmd->add_option("--llm", llm_path, "Judged JSONL")->required();
  eval_cmd->add_option("--human", human_path, "Human score CSV")->required();
  eval_cmd->add_option("--out", report_out, "Report JSON to write");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the blind annotation service");
  fs::path base_path, optimized_path, store_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<fs::path> static_dir;
  std::optional<std::uint64_t> study_seed;
  serve_cmd->add_option("--reviews", reviews_path, "Reviews JSONL")->required();
  serve_cmd->add_option("--base", base_path, "Base-prompt responses JSONL")->required();
  serve_cmd->add_option("--optimized", optimized_path, "Optimized-prompt responses JSONL")->required();
  serve_cmd->add_option("--store", store_dir, "Study directory")->required();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--static", static_dir, "UI assets served at /");
  serve_cmd->add_option("--seed", study_seed, "Overrides annotation.seed");

  // export
  auto* export_cmd = app.add_subcommand("export", "Export human scores as CSV");
  bool unblind = false;
  std::optional<fs::path> csv_out;
  export_cmd->add_option("--store", store_dir, "Study directory")->required();
  export_cmd->add_flag("--unblind", unblind, "Append the prompt variant of each response");
  export_cmd->add_option("--out", csv_out, "CSV file; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitUsage;
  }

  try {
    if (index_cmd->parsed()) {
      const AppConfig config = configure(common, false);
      const auto ingest = ingest_documents(docs_dir);
      for (const auto& w : ingest.warnings) logger()->warn("{}", w);
      std::vector<Chunk> chunks;
      for (const auto& doc : ingest.documents) {
        auto c = segment(doc, config.segment);
        chunks.insert(chunks.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
      }
      auto embedder = make_embedder(config);
      const auto index = build_index(chunks, *embedder);
      index.save(index_out);
      out << fmt::format("indexed {} documents into {} chunks -> {}\n", ingest.documents.size(),
                         chunks.size(), index_out.string());
    } else if (gen_cmd->parsed()) {
      const AppConfig config = configure(common, true);
      const ReviewSet reviews = select_reviews(reviews_path, split);
      PromptTemplate tmpl = resolve_prompt(prompt_spec, config);
      if (prompt_id) tmpl.id = *prompt_id;
      const auto index = VectorIndex::load(index_path);
      auto gateway = make_gateway(config);
      const ResponseGenerator generator(*gateway, index, config.generation);
      std::vector<GeneratedResponse> responses(reviews.size());
      parallel_for(reviews.size(), config.optimizer.workers,
                   [&](std::size_t i) { responses[i] = generator.generate(reviews.reviews[i], tmpl); });
      std::string text;
      for (const auto& r : responses) text += json(r).dump() + "\n";
      write_file(responses_out, text);
      out << fmt::format("generated {} responses with prompt {} -> {}\n", responses.size(), tmpl.id,
                         responses_out.string());
    } else if (judge_cmd->parsed()) {
      const AppConfig config = configure(common, true);
      const ReviewSet reviews = load_reviews(reviews_path);
      const auto responses = read_jsonl<GeneratedResponse>(responses_in);
      auto gateway = make_gateway(config);
      const Judge judge(*gateway, config.judge_config());
      std::vector<JudgedResponse> judged(responses.size());
      parallel_for(responses.size(), config.optimizer.workers, [&](std::size_t i) {
        const auto& r = responses[i];
        const Review* review = reviews.find(r.review_id);
        if (!review) throw NotFoundError(fmt::format("response {} names unknown review", r.response_id()));
        judged[i] = {r.response_id(), judge.judge_full(*review, r.text, r.context_used)};
      });
      std::ostringstream text;
      write_judged(judged, text);
      write_file(judged_out, text.str());
      std::vector<Feedback> fb;
      for (const auto& j : judged) fb.push_back(j.feedback);
      out << fmt::format("judged {} responses, average overall {:.4f} -> {}\n", judged.size(),
                         fb.empty() ? 0.0 : average_score(fb), judged_out.string());
    } else if (opt_cmd->parsed()) {
      AppConfig config = configure(common, true);
      if (seed) config.optimizer.seed = *seed;
      if (max_iterations) config.optimizer.max_iterations = *max_iterations;
      config.optimizer.validate();
      const ReviewSet reviews = select_reviews(reviews_path, opt_split);
      const PromptTemplate base = resolve_prompt(prompt_spec, config);
      const auto index = VectorIndex::load(index_path);
      auto gateway = make_gateway(config);
      const Optimizer optimizer(*gateway, index, config.judge_config(), config.generation,
                                config.rewriter_config(), config.optimizer);
      const RunStore store(config.runs_dir);
      const auto result = optimizer.optimize(reviews, base, &store, run_id);
      const PromptTemplate& chosen = select == "best" ? result.best_template : result.final_template;
      if (prompt_out) write_file(*prompt_out, chosen.text);
      out << json{{"run_dir", store.run_dir(run_id).string()},
                  {"iterations", result.iterations.size()},
                  {"terminated_by", to_string(result.terminated_by)},
                  {"final_avg", result.iterations.back().avg_overall},
                  {"best_avg", result.best_avg},
                  {"selected", chosen.id}}
                 .dump(2)
          << '\n';
    } else if (eval_cmd->parsed()) {
      const AppConfig config = configure(common, false);
      const auto judged = load_judged(llm_path);
      const auto human = import_human_scores(human_path);
      const auto report = compare_judges(llm_scores(judged, config.weights), human_scores(human));
      const auto agreement = human_agreement(human);
      out << report.render_table() << '\n' << render_agreement_table(agreement);
      if (report_out) {
        json doc = report.to_json();
        doc["agreement"] = to_json(agreement);
        write_file(*report_out, doc.dump(2) + "\n");
      }
    } else if (serve_cmd->parsed()) {
      const AppConfig config = configure(common, false);
      const ReviewSet reviews = load_reviews(reviews_path);
      const auto tasks = build_tasks(reviews, read_jsonl<GeneratedResponse>(base_path),
                                     read_jsonl<GeneratedResponse>(optimized_path));
      AnnotationStore store(store_dir, tasks, study_seed.value_or(config.annotation_seed));
      AnnotationServer server(store, static_dir);
      const int bound = server.bind(host, port);
      out << fmt::format("serving {} tasks on http://{}:{}/\n", store.task_count(), host, bound) << std::flush;
      g_server = &server;
      std::signal(SIGINT, handle_stop);
      std::signal(SIGTERM, handle_stop);
      server.listen();
      g_server = nullptr;
    } else if (export_cmd->parsed()) {
      configure(common, false);
      const auto store = AnnotationStore::open(store_dir);
      const std::string csv = store->export_csv(unblind);
      if (csv_out) {
        write_file(*csv_out, csv);
      } else {
        out << csv;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace revopt::cli
