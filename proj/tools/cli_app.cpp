// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli_app.hpp"

#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <thread>

#include "milpilot/deploy/deploy.hpp"
#include "milpilot/error.hpp"
#include "milpilot/jobs/job_runner.hpp"
#include "milpilot/json_io.hpp"
#include "milpilot/orchestrator/http_api.hpp"
#include "milpilot/orchestrator/orchestrator.hpp"
#include "milpilot/store/feature_store.hpp"
#include "milpilot/store/synthetic.hpp"

// After Eigen: the resolver headers pulled in by httplib define _res.
#include <CLI11.hpp>
#include <httplib.h>

namespace milpilot::cli {

namespace fs = std::filesystem;

namespace {

std::string EnvOr(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? std::string(value) : fallback;
}

// Failure reported by the service or a local check, with a stable code.
struct CommandError {
  std::string code;
  std::string message;
};

class ApiClient {
 public:
  ApiClient(const std::string& url, std::string token) : client_(url), token_(std::move(token)) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(600);
  }

  Json Get(const std::string& path) { return Handle(client_.Get(path, Headers()), path); }

  Json Post(const std::string& path, const Json& body) {
    return Handle(client_.Post(path, Headers(), body.dump(), "application/json"), path);
  }

 private:
  httplib::Headers Headers() const {
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    return headers;
  }

  static Json Handle(const httplib::Result& result, const std::string& path) {
    if (!result) {
      throw CommandError{"unreachable", "cannot reach the orchestrator for " + path + ": " +
                                            httplib::to_string(result.error())};
    }
    Json body = Json::parse(result->body, nullptr, false);
    if (result->status >= 400) {
      if (body.is_object() && body.contains("error")) {
        throw CommandError{body.value("error", std::string("http_error")),
                           body.value("message", std::string())};
      }
      throw CommandError{"http_error", "HTTP " + std::to_string(result->status) + " for " + path};
    }
    if (body.is_discarded()) throw CommandError{"bad_response", "non-JSON response for " + path};
    return body;
  }

  httplib::Client client_;
  std::string token_;
};

struct Globals {
  bool json = false;
  std::string url = EnvOr("MILPILOT_URL", "http://127.0.0.1:8080");
  std::string token = EnvOr("MILPILOT_TOKEN", "");
};

void PrintTable(std::ostream& out, const std::vector<MetricEvent>& events) {
  for (const MetricEvent& e : events) {
    const Json& p = e.payload;
    out << std::left << std::setw(6) << e.epoch << std::setw(6) << e.split;
    if (e.fold) out << "fold " << *e.fold << "  ";
    out << std::fixed << std::setprecision(4) << "loss " << p.value("loss", 0.0) << "  auroc "
        << p.value("auroc", 0.0) << "  pr_auc " << p.value("pr_auc", 0.0) << "  bal_acc "
        << p.value("balanced_accuracy", 0.0) << "  lr " << std::scientific << std::setprecision(2)
        << p.value("learning_rate", 0.0) << std::defaultfloat << "\n";
  }
}

std::string SessionOrNew(ApiClient& api, const std::string& session) {
  if (!session.empty()) return session;
  return api.Post("/sessions", Json::object()).at("session_id").get<std::string>();
}

std::atomic<ApiServer*> g_serving{nullptr};

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"milpilot: train, tune, compare and deploy MIL slide classifiers"};
  app.name("milpilot");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  app.add_option("--url", g.url, "Orchestrator base URL (env MILPILOT_URL)");
  app.add_option("--token", g.token, "Bearer token (env MILPILOT_TOKEN)");

  // synth-gen
  auto* synth = app.add_subcommand("synth-gen", "Generate a planted-signal feature store");
  std::string synth_out;
  SyntheticSpec spec;
  std::size_t per_class = 100, classes = 2, shards = kDefaultShardCount;
  synth->add_option("--out", synth_out, "Output store directory")->required();
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--cases-per-class", per_class, "Cases per class");
  synth->add_option("--classes", classes, "Number of classes");
  synth->add_option("--slides-per-case", spec.slides_per_case, "Slides per case");
  synth->add_option("--dim", spec.feature_dim, "Feature dimension");
  synth->add_option("--patches-min", spec.patches_min, "Minimum patches per slide");
  synth->add_option("--patches-max", spec.patches_max, "Maximum patches per slide");
  synth->add_option("--signal-fraction", spec.signal_fraction, "Fraction of signal patches");
  synth->add_option("--signal-strength", spec.signal_strength, "Signal amplitude");
  synth->add_option("--noise-sigma", spec.noise_sigma, "Noise standard deviation");
  synth->add_option("--shards", shards, "Shard count");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a cohort against a feature store");
  std::string validate_store, validate_cohort;
  std::size_t min_per_class = kMinSamplesPerClass;
  validate->add_option("--store", validate_store, "Feature store directory")->required();
  validate->add_option("--cohort", validate_cohort, "Cohort JSON file")->required();
  validate->add_option("--min-per-class", min_per_class, "Minimum samples per class");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the orchestrator REST service");
  std::string serve_config;
  OrchestratorConfig oc;
  std::string data_dir, log_dir, artifact_dir, run_dir, store_dir, trainer;
  long long poll_ms = -1;
  std::size_t max_concurrent = 0;
  std::string bind;
  serve->add_option("--config", serve_config, "Service config JSON");
  serve->add_option("--data-dir", data_dir, "Document directory");
  serve->add_option("--log-dir", log_dir, "Trainer log directory");
  serve->add_option("--artifact-dir", artifact_dir, "Deployment artifact directory");
  serve->add_option("--run-dir", run_dir, "Per-job output directory");
  serve->add_option("--store-dir", store_dir, "Default feature store");
  serve->add_option("--poll-interval-ms", poll_ms, "Log poll interval");
  serve->add_option("--max-concurrent", max_concurrent, "Concurrent trainer processes");
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--trainer", trainer, "Trainer executable");

  // train / tune / compare
  std::string job_config_path, session;
  bool local = false;
  auto add_job_command = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", job_config_path, "Job config JSON file")->required();
    cmd->add_option("--session", session, "Session id (created when absent)");
    return cmd;
  };
  auto* train = add_job_command("train", "Submit a training job");
  train->add_flag("--local", local,
                  "Run in this process, bypassing the orchestrator (debugging only)");
  auto* tune = add_job_command("tune", "Submit a staged hyperparameter search");
  auto* compare = add_job_command("compare", "Train all four strategies side by side");

  // monitor
  auto* monitor = app.add_subcommand("monitor", "Follow a job's metrics until it ends");
  std::string job_id;
  long long interval_ms = 2000;
  bool once = false;
  monitor->add_option("--job", job_id, "Job id")->required();
  monitor->add_option("--interval-ms", interval_ms, "Poll interval");
  monitor->add_flag("--once", once, "Print the current state and exit");

  // stop
  auto* stop = app.add_subcommand("stop", "Stop a running job");
  stop->add_option("--job", job_id, "Job id")->required();

  // deploy
  auto* deploy = app.add_subcommand("deploy", "Deploy a completed job as a widget");
  std::string title, description, organ;
  std::vector<std::string> tags;
  bool approve = false;
  deploy->add_option("--job", job_id, "Job id")->required();
  deploy->add_option("--title", title, "Widget title")->required();
  deploy->add_option("--description", description, "Widget description");
  deploy->add_option("--organ", organ, "Organ")->required();
  deploy->add_option("--tag", tags, "Tag (repeatable)");
  deploy->add_flag("--approve", approve, "Explicit human approval");

  // infer
  auto* infer = app.add_subcommand("infer", "Classify one slide with a deployed artifact");
  std::string artifact, infer_store, case_id, slide_id;
  infer->add_option("--artifact", artifact, "Artifact directory")->required();
  infer->add_option("--store", infer_store, "Feature store directory")->required();
  infer->add_option("--case", case_id, "Case id")->required();
  infer->add_option("--slide", slide_id, "Slide id (defaults to the case's first slide)");

  // outcomes
  auto* outcomes = app.add_subcommand("outcomes", "List anonymized tuning outcomes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (g.json) {
      out << Json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    } else {
      err << "usage error: " << e.what() << "\n" << app.help();
    }
    return 2;
  }

  auto emit = [&](const Json& value, const std::string& text) {
    if (g.json) {
      out << value.dump() << "\n";
    } else {
      out << text;
    }
  };

  try {
    if (*synth) {
      spec.cases_per_class.assign(classes, per_class);
      const std::vector<PatchFeatureBag> bags = GenerateSynthetic(spec);
      WriteStore(bags, shards, synth_out);
      const CohortSpec cohort = CohortForBags(bags);
      const fs::path cohort_path = fs::path(synth_out) / "cohort.json";
      WriteJsonFileAtomic(cohort_path, CohortToJson(cohort));
      emit({{"store_dir", synth_out},
            {"cohort", cohort_path.string()},
            {"slides", bags.size()},
            {"classes", classes}},
           "wrote " + std::to_string(bags.size()) + " slides to " + synth_out + "\ncohort: " +
               cohort_path.string() + "\n");
      return 0;
    }

    if (*validate) {
      const RoutingIndex index = RoutingIndex::Load(validate_store);
      const CohortSpec cohort = CohortFromJson(ReadJsonFile(validate_cohort));
      const ValidationReport report = ValidateFeatures(index, cohort, min_per_class);
      if (g.json) {
        Json body = report.ToJson();
        body["ok"] = report.ok();
        out << body.dump() << "\n";
      } else {
        for (const SlideRef& ref : report.missing) out << "missing: " << ref.ToString() << "\n";
        for (const auto& [cls, n] : report.per_class_counts) {
          out << "class " << cls << ": " << n << " slides\n";
        }
        for (const std::string& cls : report.below_minimum) {
          out << "below minimum (" << min_per_class << "): " << cls << "\n";
        }
        out << (report.ok() ? "ok\n" : "FAILED\n");
      }
      return report.ok() ? 0 : 1;
    }

    if (*serve) {
      if (!serve_config.empty()) oc = OrchestratorConfig::FromJson(ReadJsonFile(serve_config));
      oc.ApplyEnvironment();
      if (!data_dir.empty()) oc.data_dir = data_dir;
      if (!log_dir.empty()) oc.log_dir = log_dir;
      if (!artifact_dir.empty()) oc.artifact_dir = artifact_dir;
      if (!run_dir.empty()) oc.run_dir = run_dir;
      if (!store_dir.empty()) oc.store_dir = store_dir;
      if (poll_ms >= 0) oc.poll_interval = std::chrono::milliseconds(poll_ms);
      if (max_concurrent > 0) oc.max_concurrent = max_concurrent;
      if (!bind.empty()) oc.bind = bind;
      if (!trainer.empty()) oc.trainer_executable = trainer;
      if (!g.token.empty()) oc.token = g.token;

      // SIGINT and SIGTERM are collected by a watcher thread.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

      Orchestrator orchestrator(oc);
      ApiServer server(orchestrator, oc.token);
      const auto [host, port] = ParseBindAddress(oc.bind);
      const int bound = server.Bind(host, port);
      if (bound < 0) throw CommandError{"bind_failed", "cannot bind " + oc.bind};
      orchestrator.StartPoller();
      emit({{"listening", host + ":" + std::to_string(bound)},
            {"config", orchestrator.config().ToJson()}},
           "listening on " + host + ":" + std::to_string(bound) + "\n");
      out.flush();
      g_serving = &server;
      std::thread watcher([stop_signals] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        if (ApiServer* s = g_serving.load()) s->Stop();
      });
      server.Serve();
      g_serving = nullptr;
      orchestrator.StopPoller();
      pthread_kill(watcher.native_handle(), SIGTERM);
      watcher.join();
      return 0;
    }

    if (*train || *tune || *compare) {
      const Json config = ReadJsonFile(job_config_path);
      const JobKind kind = *train ? JobKind::kTrain : (*tune ? JobKind::kTune : JobKind::kCompare);
      if (local) {
        err << "local mode: runs in this process and bypasses the orchestrator\n";
        Json raw = config;
        raw["kind"] = "train";
        JobConfig job = JobConfigFromJson(raw);
        if (job.job_id.empty()) job.job_id = "local";
        const ValidationReport report =
            ValidateFeatures(RoutingIndex::Load(job.store_dir), job.cohort);
        if (!report.ok()) throw Error(ErrorCode::kGuardrail, report.ToJson().dump());
        StdoutSink sink;
        return RunJob(job, sink);
      }
      ApiClient api(g.url, g.token);
      const std::string sid = SessionOrNew(api, session);
      const Json job = api.Post(
          "/jobs", {{"session_id", sid}, {"kind", JobKindName(kind)}, {"config", config}});
      emit(job, "submitted " + job.value("kind", std::string()) + " job " +
                    job.value("job_id", std::string()) + " (" + job.value("state", std::string()) +
                    ")\n");
      return 0;
    }

    if (*monitor) {
      ApiClient api(g.url, g.token);
      std::optional<std::size_t> since;
      std::vector<MetricEvent> seen;
      Json job;
      while (true) {
        job = api.Get("/jobs/" + job_id);
        const std::string query =
            since ? "?since_epoch=" + std::to_string(*since) : std::string();
        std::vector<MetricEvent> fresh;
        for (const Json& e : api.Get("/jobs/" + job_id + "/metrics" + query)) {
          fresh.push_back(MetricEvent::FromJson(e));
        }
        // Events of the last shown epoch can arrive after it was first printed.
        fresh.erase(std::remove_if(fresh.begin(), fresh.end(),
                                   [&](const MetricEvent& e) {
                                     return std::any_of(seen.begin(), seen.end(),
                                                        [&](const MetricEvent& s) {
                                                          return s.key() == e.key();
                                                        });
                                   }),
                    fresh.end());
        if (!g.json) PrintTable(out, fresh);
        for (const MetricEvent& e : fresh) {
          // Epoch e is complete once a later one appears; keep re-reading the last.
          seen.push_back(e);
        }
        if (!seen.empty()) {
          std::size_t last = 0;
          for (const MetricEvent& e : seen) last = std::max(last, e.epoch);
          since = last == 0 ? std::nullopt : std::optional<std::size_t>(last - 1);
        }
        const JobState state = ParseJobState(job.at("state").get<std::string>());
        if (once || IsTerminal(state)) break;
        out.flush();
        std::this_thread::sleep_for(std::chrono::milliseconds(interval_ms));
      }
      if (g.json) {
        Json metrics = Json::array();
        for (const MetricEvent& e : seen) metrics.push_back(e.ToJson());
        out << Json{{"job", job}, {"metrics", metrics}}.dump() << "\n";
      } else {
        out << "job " << job_id << ": " << job.value("state", std::string());
        if (job.contains("error") && job.at("error").is_string()) {
          out << " (" << job.at("error").get<std::string>() << ")";
        }
        out << "\n";
      }
      return 0;
    }

    if (*stop) {
      ApiClient api(g.url, g.token);
      const Json job = api.Post("/jobs/" + job_id + "/stop", Json::object());
      emit(job, "job " + job_id + ": " + job.value("state", std::string()) + "\n");
      return 0;
    }

    if (*deploy) {
      if (!approve) {
        throw CommandError{"approval_required",
                           "deployment requires explicit approval; rerun with --approve"};
      }
      ApiClient api(g.url, g.token);
      const Json record = api.Post("/deployments", {{"job_id", job_id},
                                                    {"approved", true},
                                                    {"title", title},
                                                    {"description", description},
                                                    {"organ", organ},
                                                    {"tags", tags}});
      emit(record, "deployed " + record.value("widget_id", std::string()) + " at " +
                       record.value("artifact_path", std::string()) + "\n");
      return 0;
    }

    if (*infer) {
      const LoadedModel model = LoadModel(artifact);
      FeatureStore store = FeatureStore::Open(infer_store);
      if (slide_id.empty()) {
        const RoutingEntry* entry = store.index().Find(case_id);
        if (entry == nullptr || entry->slide_ids.empty()) {
          throw Error(ErrorCode::kMissingFeature, "no slides for case " + case_id);
        }
        slide_id = entry->slide_ids.front();
      }
      const InferenceResult result = Predict(model, store.ReadSlide(case_id, slide_id));
      std::ostringstream text;
      text << case_id << "/" << slide_id << ": " << result.predicted_label << "\n";
      for (const auto& [label, p] : result.probabilities) {
        text << "  " << label << " " << std::fixed << std::setprecision(4) << p << "\n";
      }
      emit(result.ToJson(), text.str());
      return 0;
    }

    if (*outcomes) {
      ApiClient api(g.url, g.token);
      const Json list = api.Get("/tuning-outcomes");
      std::ostringstream text;
      for (const Json& o : list) {
        text << o.value("job_hash", std::string()).substr(0, 12) << "  "
             << o.value("strategy", std::string()) << "  " << o.value("method", std::string())
             << "  " << o.value("winning_metric", 0.0) << "  " << o.at("winning_values").dump()
             << "\n";
      }
      emit(list, text.str());
      return 0;
    }
  } catch (const CommandError& e) {
    if (g.json) {
      out << Json{{"error", e.code}, {"message", e.message}}.dump() << "\n";
    } else {
      err << "error (" << e.code << "): " << e.message << "\n";
    }
    return 1;
  } catch (const Error& e) {
    if (g.json) {
      out << Json{{"error", ErrorCodeName(e.code())}, {"message", e.what()}}.dump() << "\n";
    } else {
      err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    if (g.json) {
      out << Json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    } else {
      err << "error: " << e.what() << "\n";
    }
    return 1;
  }
  return 2;
}

}  // namespace milpilot::cli
