// tm: command-line front end for the tmkit pipeline.
//
// Exit codes: 0 ok (warnings allowed), 1 validation errors, 2 parse errors,
// 3 usage errors, 4 internal errors.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmkit/tmkit.hpp"

namespace {

enum Exit : int { ok = 0, validation = 1, parse_failure = 2, usage = 3, internal = 4 };

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{usage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{usage, "cannot write " + path};
  out << text;
}

tmkit::Model load_model(const std::string& path) {
  auto result = tmkit::parse(read_file(path), path);
  for (const auto& d : result.diagnostics) std::cerr << tmkit::format(d) << '\n';
  if (!result.ok()) throw Failure{parse_failure, {}};
  return std::move(*result.model);
}

tmkit::ValidationReport full_report(const tmkit::Model& m, tmkit::Mode mode) {
  auto report = tmkit::validate_all(m, mode);
  report.merge(tmkit::check_declared_behavior(m));
  return report;
}

void print_text(std::ostream& os, const tmkit::ValidationReport& r) {
  for (const auto& v : r.violations) os << tmkit::format(v) << '\n';
  os << r.error_count() << " error(s), " << r.warning_count() << " warning(s)\n";
}

struct ValidateArgs {
  std::string file;
  bool lenient = false;
  std::string format = "text";
};

int run_validate(const ValidateArgs& a) {
  auto m = load_model(a.file);
  auto report = full_report(m, a.lenient ? tmkit::Mode::lenient : tmkit::Mode::strict);
  if (a.format == "json") std::cout << tmkit::to_json(report);
  else print_text(std::cout, report);
  return report.has_errors() ? validation : ok;
}

struct SimulateArgs {
  std::string file;
  std::string config;
  std::string out;
  std::optional<tmkit::Tick> max_ticks;
  bool check_behavior = false;
  std::string format = "text";
};

int run_simulate(const SimulateArgs& a) {
  auto m = load_model(a.file);
  tmkit::SimConfig cfg;
  try {
    cfg = tmkit::sim_config_from_json(read_file(a.config));
  } catch (const tmkit::ImportError& e) {
    throw Failure{usage, a.config + ": " + e.what()};
  }
  if (a.max_ticks) cfg.max_ticks = *a.max_ticks;

  auto static_report = tmkit::validate_all(m, tmkit::Mode::strict);
  if (static_report.has_errors()) {
    print_text(std::cerr, static_report);
    return validation;
  }

  tmkit::SimLog log;
  try {
    log = tmkit::simulate(m, cfg);
  } catch (const tmkit::SimulationError& e) {
    throw Failure{e.code() == tmkit::SimErrc::unvalidated_model ? validation : usage, e.what()};
  }
  write_output(a.out, a.format == "json" ? tmkit::to_json(log) : tmkit::to_text(log));

  for (const auto& [id, n] : tmkit::occurrence_counts(log, m)) std::cout << id << '\t' << n << '\n';
  for (const auto& note : log.notes) std::cerr << "note: " << note << '\n';

  if (a.check_behavior) {
    auto r = tmkit::check_behavioral_consistency(log, m);
    if (r.has_errors()) {
      print_text(std::cerr, r);
      return validation;
    }
  }
  return ok;
}

struct RenderArgs {
  std::string file;
  std::string view = "static";
  std::string out;
  bool lenient = false;
  std::vector<std::string> highlight;
  bool no_annotations = false;
};

int run_render(const RenderArgs& a) {
  auto m = load_model(a.file);
  auto report = tmkit::validate_all(m, a.lenient ? tmkit::Mode::lenient : tmkit::Mode::strict);
  if (report.has_errors()) {
    print_text(std::cerr, report);
    return validation;
  }
  tmkit::RenderOptions o;
  o.view = *tmkit::parse_view(a.view);
  o.highlight_events.insert(a.highlight.begin(), a.highlight.end());
  o.include_annotations = !a.no_annotations;
  write_output(a.out, tmkit::to_dot(m, o));
  return ok;
}

struct ExportArgs {
  std::string file;
  std::string out;
};

int run_export(const ExportArgs& a) {
  write_output(a.out, tmkit::to_json(load_model(a.file)));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thinging Machine model toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tm 1.0.0");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Run the static, event and behavior validators");
  validate->add_option("file", va.file, "Model file")->required()->check(CLI::ExistingFile);
  validate->add_flag("--lenient", va.lenient, "Report intra-thimac adjacency as warnings");
  validate->add_option("--format", va.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}));

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run the tick simulation and write the log");
  simulate->add_option("file", sa.file, "Model file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--config", sa.config, "Simulation config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sa.out, "Log output path")->required();
  simulate->add_option("--max-ticks", sa.max_ticks, "Override the config horizon");
  simulate->add_flag("--check-behavior", sa.check_behavior,
                     "Fail when the log contradicts declared behavior");
  simulate->add_option("--format", sa.format, "Log format")
      ->check(CLI::IsMember({"text", "json"}));

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Write a DOT view of the model");
  render->add_option("file", ra.file, "Model file")->required()->check(CLI::ExistingFile);
  render->add_option("--view", ra.view, "View to render")
      ->check(CLI::IsMember({"static", "dynamic", "behavior"}));
  render->add_option("--out", ra.out, "Output path (default: standard output)");
  render->add_flag("--lenient", ra.lenient, "Render models with adjacency warnings only");
  render->add_option("--highlight", ra.highlight, "Event ids to highlight")->delimiter(',');
  render->add_flag("--no-annotations", ra.no_annotations, "Omit step number labels");

  ExportArgs ea;
  auto* exporter = app.add_subcommand("export", "Write the model as JSON");
  exporter->add_option("file", ea.file, "Model file")->required()->check(CLI::ExistingFile);
  exporter->add_option("--out", ea.out, "Output path (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*validate) return run_validate(va);
    if (*simulate) return run_simulate(sa);
    if (*render) return run_render(ra);
    if (*exporter) return run_export(ea);
  } catch (const Failure& f) {
    if (!f.message.empty()) std::cerr << "tm: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "tm: internal error: " << e.what() << '\n';
    return internal;
  }
  return usage;
}
