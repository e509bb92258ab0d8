#pragma once

#include "adlsense/config.hpp"
#include "adlsense/error.hpp"
#include "adlsense/pipeline.hpp"
#include "adlsense/radar_render.hpp"
#include "adlsense/resident_sim.hpp"
#include "adlsense/service_api.hpp"
#include "adlsense/service_server.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace adlsense::cli {

enum Exit { ok = 0, domain_error = 1, usage_error = 2 };

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options shared by the analysis subcommands.
struct Inputs {
  std::string config;
  std::string events;
  std::string resident = "resident";
  std::string date;
  std::string from;
  std::string to;
  std::string out;
  bool json = false;
};

inline void add_config(CLI::App* sub, Inputs& in) {
  sub->add_option("--config", in.config, "Config file (TOML, or JSON when named *.json)")->envname("ADLSENSE_CONFIG");
}

inline void add_events(CLI::App* sub, Inputs& in, bool with_range) {
  add_config(sub, in);
  sub->add_option("--events", in.events, "Event JSONL file")->required()->envname("ADLSENSE_EVENTS");
  sub->add_option("--resident", in.resident, "Resident id attached to the events")->capture_default_str();
  sub->add_option("--date", in.date, "Single profile day, YYYY-MM-DD");
  if (with_range) {
    sub->add_option("--from", in.from, "First profile day, inclusive");
    sub->add_option("--to", in.to, "Last profile day, inclusive");
  }
  sub->add_option("--out", in.out, "Output file (default stdout)")->envname("ADLSENSE_OUT");
}

inline AppConfig load(const Inputs& in, bool required = true) {
  if (in.config.empty()) {
    if (required) throw UsageError("--config is required");
    return AppConfig{};
  }
  return load_config(in.config);
}

inline std::optional<Date> date_arg(const std::string& s, const char* flag) {
  if (s.empty()) return std::nullopt;
  try {
    return parse_date(s);
  } catch (const Error&) {
    throw UsageError(std::string(flag) + " must be YYYY-MM-DD, got '" + s + "'");
  }
}

inline DateRange range_of(const Inputs& in) {
  if (!in.date.empty() && (!in.from.empty() || !in.to.empty())) throw UsageError("--date excludes --from/--to");
  if (auto d = date_arg(in.date, "--date")) return DateRange{d, d};
  return DateRange{date_arg(in.from, "--from"), date_arg(in.to, "--to")};
}

/// Writes to --out, or to `fallback` when no file was given.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) fail(ErrorCode::Io, "cannot write '" + path + "'");
    os_ = &file_;
  }
  std::ostream& operator*() { return *os_; }
  void finish() {
    os_->flush();
    if (!*os_) fail(ErrorCode::Io, "write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline const DayAnalysis& single_day(const std::vector<DayAnalysis>& days, const Inputs& in) {
  if (in.date.empty()) throw UsageError("--date is required");
  auto d = *date_arg(in.date, "--date");
  for (const auto& day : days) {
    if (day.date == d) return day;
  }
  fail(ErrorCode::Validation, "no profile for " + in.resident + " on " + in.date);
}

inline RiskFactor factor_arg(const std::string& s) {
  auto f = parse_risk_factor(s);
  if (!f) throw UsageError("unknown factor '" + s + "'");
  return *f;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::atomic<bool> g_reload{false};
inline std::atomic<bool> g_stop{false};

inline void on_signal(int sig) {
  if (sig == SIGHUP) {
    g_reload = true;
  } else {
    g_stop = true;
  }
}

}  // namespace detail

/// Entry point for the adlsense tool. Output goes to `out` unless --out is
/// given; logs and errors go to `err`.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using detail::Inputs;
  CLI::App app{"Ambient-sensor ADL analysis: simulate, segment, profile, score, retrieve, render, serve"};
  app.name("adlsense");
  app.require_subcommand(1);
  app.fallthrough();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic event stream with ground truth");
  Inputs sim_in;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> days;
  std::string truth_path;
  std::string sim_resident;
  detail::add_config(sim, sim_in);
  sim->add_option("--scenario", scenario, "Scenario name")->required();
  sim->add_option("--seed", seed, "Override the scenario seed")->envname("ADLSENSE_SEED");
  sim->add_option("--days", days, "Override the number of days")->check(CLI::PositiveNumber);
  sim->add_option("--resident", sim_resident, "Resident id (default: scenario name)");
  sim->add_option("--out", sim_in.out, "Event JSONL output (default stdout)")->envname("ADLSENSE_OUT");
  sim->add_option("--truth", truth_path, "Ground-truth episode JSONL output");

  // segment
  auto* seg = app.add_subcommand("segment", "Recognise ADL episodes; writes episode JSONL");
  Inputs seg_in;
  detail::add_events(seg, seg_in, true);

  // profile
  auto* prof = app.add_subcommand("profile", "Build daily profiles; writes profile JSONL");
  Inputs prof_in;
  std::string out_dir;
  detail::add_events(prof, prof_in, true);
  prof->add_option("--out-dir", out_dir,
                   "Run the whole pipeline and write episodes, profiles, risk and casebase files here");

  // score
  auto* score = app.add_subcommand("score", "Score daily profiles against the risk factors");
  Inputs score_in;
  detail::add_events(score, score_in, true);
  score->add_flag("--json", score_in.json, "Emit the risk payload as JSON (one document per line)");

  // retrieve
  auto* ret = app.add_subcommand("retrieve", "Retrieve the most similar stored cases for one day");
  Inputs ret_in;
  std::string casebase;
  std::optional<int> k;
  bool include_self = false;
  detail::add_events(ret, ret_in, false);
  ret->add_option("--casebase", casebase, "Case base JSON")->required();
  ret->add_option("--k", k, "Number of neighbours (default from config)");
  ret->add_flag("--include-self", include_self, "Also consider cases of the same resident");
  ret->add_flag("--json", ret_in.json, "Emit JSON");

  // trend
  auto* tr = app.add_subcommand("trend", "Factor score series or self-similarity series");
  Inputs tr_in;
  std::string factor;
  std::optional<int> window;
  detail::add_events(tr, tr_in, true);
  auto* factor_opt = tr->add_option("--factor", factor, "Risk factor (Sleep, SleepDisturbances, ...)");
  auto* window_opt = tr->add_option("--window", window, "Self-similarity window in days (default from config)");
  factor_opt->excludes(window_opt);
  tr->add_flag("--json", tr_in.json, "Emit JSON");

  // render
  auto* ren = app.add_subcommand("render", "Render a radar chart (or a factor trend chart) as SVG");
  Inputs ren_in;
  std::string overlay;
  std::string trend_factor;
  detail::add_events(ren, ren_in, true);
  ren->add_option("--overlay", overlay, "Radar overlays: risky, history or both (comma separated)");
  ren->add_option("--trend", trend_factor, "Render this factor's trend instead of a radar");

  // serve
  auto* srv = app.add_subcommand("serve", "Serve the read-only HTTP API (SIGHUP reloads)");
  Inputs srv_in;
  std::string listen;
  detail::add_config(srv, srv_in);
  srv->add_option("--listen", listen, "HOST:PORT (default from config)")->envname("ADLSENSE_LISTEN");

  // validate-config
  auto* val = app.add_subcommand("validate-config", "Validate a config file and print its fingerprint");
  Inputs val_in;
  detail::add_config(val, val_in);
  val->add_flag("--json", val_in.json, "Print the canonical config as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // exit() prints help for whichever (sub)command asked for it.
    const int code = app.exit(e, out, err);
    if (code == 0) return ok;
    return usage_error;
  }

  try {
    if (sim->parsed()) {
      AppConfig cfg = detail::load(sim_in, false);
      auto sc = find_scenario(cfg, scenario);
      if (!sc) throw detail::UsageError("unknown scenario '" + scenario + "'");
      if (seed) sc->seed = *seed;
      if (days) sc->days = *days;
      SimulationResult r = simulate(*sc, sim_resident);
      detail::Sink sink(sim_in.out, out);
      write_events(*sink, r.stream);
      sink.finish();
      if (!truth_path.empty()) {
        detail::Sink truth(truth_path, out);
        write_ground_truth(*truth, r.ground_truth);
        truth.finish();
      }
      err << "simulate: " << sc->name << " seed " << sc->seed << ", " << r.stream.events.size() << " events over "
          << sc->days << " days\n";
      return ok;
    }

    if (seg->parsed()) {
      AppConfig cfg = detail::load(seg_in);
      auto days_out = analyse_stream(load_stream(seg_in.events, seg_in.resident), cfg, detail::range_of(seg_in));
      detail::Sink sink(seg_in.out, out);
      std::size_t n = 0;
      for (const auto& d : days_out) {
        for (const auto& ep : d.episodes) {
          nlohmann::ordered_json j;
          j["resident"] = d.profile.resident_id;
          j["date"] = format_date(d.date);
          const auto body = episode_to_json(ep);
          for (const auto& [key, v] : body.items()) j[key] = v;
          *sink << j.dump() << '\n';
          ++n;
        }
      }
      sink.finish();
      err << "segment: " << n << " episodes over " << days_out.size() << " days\n";
      return ok;
    }

    if (prof->parsed()) {
      AppConfig cfg = detail::load(prof_in);
      auto result = run_pipeline(prof_in.events, cfg, prof_in.resident, detail::range_of(prof_in));
      if (!out_dir.empty()) {
        write_artifacts(result, out_dir);
        err << "profile: " << result.days.size() << " days written to " << out_dir << "\n";
        return ok;
      }
      detail::Sink sink(prof_in.out, out);
      for (const auto& d : result.days) *sink << profile_to_record(d.profile).dump() << '\n';
      sink.finish();
      err << "profile: " << result.days.size() << " days\n";
      return ok;
    }

    if (score->parsed()) {
      AppConfig cfg = detail::load(score_in);
      auto days_out = analyse_stream(load_stream(score_in.events, score_in.resident), cfg, detail::range_of(score_in));
      if (!score_in.date.empty() && days_out.empty()) {
        fail(ErrorCode::Validation, "no profile for " + score_in.resident + " on " + score_in.date);
      }
      detail::Sink sink(score_in.out, out);
      for (const auto& d : days_out) {
        if (score_in.json) {
          *sink << risk_payload(d, cfg).dump() << '\n';
          continue;
        }
        *sink << format_date(d.date);
        for (auto f : kAllFactors) {
          const auto& s = d.risk.scores[index_of(f)];
          *sink << ' ' << to_string(f) << '=' << (s ? detail::fmt(*s) : "null");
        }
        *sink << " flags=";
        for (std::size_t i = 0; i < d.risk.flags.size(); ++i) *sink << (i ? "," : "") << to_string(d.risk.flags[i]);
        *sink << '\n';
      }
      sink.finish();
      return ok;
    }

    if (ret->parsed()) {
      AppConfig cfg = detail::load(ret_in);
      auto days_out = analyse_stream(load_stream(ret_in.events, ret_in.resident), cfg, detail::range_of(ret_in));
      const DayAnalysis& day = detail::single_day(days_out, ret_in);
      CaseBase base = load_casebase(casebase);
      SimilarityConfig sc = cfg.similarity;
      if (k) {
        if (*k < 1) throw detail::UsageError("--k must be >= 1");
        sc.k = *k;
      }
      auto payload = retrieval_payload(day, base, sc, include_self);
      detail::Sink sink(ret_in.out, out);
      if (ret_in.json) {
        *sink << payload.dump() << '\n';
      } else {
        *sink << "recommendation=" << payload["recommendation"].get<std::string>()
              << " vote_score=" << detail::fmt(payload["vote_score"].get<double>()) << '\n';
        for (const auto& n : payload["neighbours"]) {
          *sink << n["case_id"].get<std::string>() << ' ' << detail::fmt(n["similarity"].get<double>()) << ' '
                << n["label"].get<std::string>() << '\n';
        }
      }
      sink.finish();
      return ok;
    }

    if (tr->parsed()) {
      AppConfig cfg = detail::load(tr_in);
      auto result = run_pipeline(tr_in.events, cfg, tr_in.resident, detail::range_of(tr_in));
      nlohmann::ordered_json payload;
      if (!factor.empty()) {
        payload = trend_payload(tr_in.resident, result.days, detail::factor_arg(factor), cfg);
      } else {
        const int w = window.value_or(cfg.trend_window);
        if (w < 1) throw detail::UsageError("--window must be >= 1");
        payload = self_similarity_payload(tr_in.resident, result.days, w, result.casebase, cfg);
      }
      detail::Sink sink(tr_in.out, out);
      if (tr_in.json) {
        *sink << payload.dump() << '\n';
      } else {
        const char* key = factor.empty() ? "self_similarity" : "score";
        const char* flag = factor.empty() ? "flag" : "flagged";
        for (const auto& p : payload["series"]) {
          *sink << p["date"].get<std::string>() << ' '
                << (p[key].is_null() ? std::string("null") : detail::fmt(p[key].get<double>()))
                << (p[flag].get<bool>() ? " *" : "") << '\n';
        }
      }
      sink.finish();
      return ok;
    }

    if (ren->parsed()) {
      AppConfig cfg = detail::load(ren_in);
      std::string svg;
      if (!trend_factor.empty()) {
        const RiskFactor f = detail::factor_arg(trend_factor);
        auto days_out = analyse_stream(load_stream(ren_in.events, ren_in.resident), cfg, detail::range_of(ren_in));
        std::vector<TrendPointScores> series;
        for (const auto& d : days_out) series.push_back(TrendPointScores{d.date, d.risk.scores});
        svg = render_trend(series, f, cfg.risky_template.scores[index_of(f)]);
      } else {
        // History needs the days before the chosen one, so analyse them all.
        auto days_out = analyse_stream(load_stream(ren_in.events, ren_in.resident), cfg);
        const DayAnalysis& day = detail::single_day(days_out, ren_in);
        auto overlays = parse_overlays(overlay);
        if (!overlays) throw detail::UsageError("--overlay takes risky, history or both");
        svg = render_radar(radar_spec_for(days_out, day, cfg, *overlays));
      }
      detail::Sink sink(ren_in.out, out);
      *sink << svg;
      sink.finish();
      return ok;
    }

    if (srv->parsed()) {
      AppConfig cfg = detail::load(srv_in);
      auto [host, port] = parse_listen(listen.empty() ? cfg.service.listen : listen);
      SnapshotHolder holder;
      holder.publish(build_snapshot(cfg));
      err << "serve: snapshot " << config_fingerprint(cfg) << " with " << cfg.service.residents.size()
          << " residents\n";
      ApiServer server(holder);
      const int bound = server.bind(host, port);
      if (bound < 0) fail(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
      err << "serve: listening on " << host << ":" << bound << "\n";
      detail::g_stop = false;
      detail::g_reload = false;
      std::signal(SIGHUP, detail::on_signal);
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      std::thread watcher([&] {
        while (!detail::g_stop) {
          std::this_thread::sleep_for(std::chrono::milliseconds(100));
          if (!detail::g_reload.exchange(false)) continue;
          try {
            AppConfig next = detail::load(srv_in);
            holder.publish(build_snapshot(next));
            err << "serve: reloaded, fingerprint " << config_fingerprint(next) << "\n";
          } catch (const std::exception& e) {
            err << "serve: reload failed, keeping the old snapshot: " << e.what() << "\n";
          }
        }
        server.stop();
      });
      server.listen_after_bind();
      detail::g_stop = true;
      watcher.join();
      return ok;
    }

    if (val->parsed()) {
      AppConfig cfg = detail::load(val_in);
      if (val_in.json) {
        out << config_to_json(cfg).dump(2) << '\n';
      } else {
        out << "ok " << config_fingerprint(cfg) << '\n';
      }
      return ok;
    }
  } catch (const detail::UsageError& e) {
    err << "adlsense: " << e.what() << "\n";
    return usage_error;
  } catch (const Error& e) {
    err << "adlsense: " << e.what() << "\n";
    return e.code() == ErrorCode::Config ? usage_error : domain_error;
  } catch (const std::exception& e) {
    err << "adlsense: " << e.what() << "\n";
    return domain_error;
  }
  return usage_error;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), out, err);
}

}  // namespace adlsense::cli
