#pragma once

#include <string>

#include <CLI11.hpp>

#include "cli_common.hpp"
#include "privlog/corpus.hpp"
#include "privlog/error.hpp"

namespace privlog::cli {

// Corpus flags shared by privlog-gencorpus and privlog-bench.
struct CorpusOptions {
  BenchConfig cfg;
  std::string density = "medium";
  std::string start = "2024-10-01";

  void attach(CLI::App& app) {
    app.add_option("--lines", cfg.line_count, "number of log lines")->check(CLI::PositiveNumber);
    app.add_option("--density", density, "low, medium or high");
    app.add_option("--days", cfg.day_span, "consecutive days covered")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "generator seed");
    app.add_option("--start", start, "first day (YYYY-MM-DD)");
    app.add_option("--url-min-query", cfg.url_min_query, "shortest URL query string");
    app.add_option("--url-max-query", cfg.url_max_query, "longest URL query string");
  }

  BenchConfig finish() {
    auto d = parse_density(density);
    if (!d) throw Error(ErrorCode::InvalidArgument, "--density must be low, medium or high");
    cfg.density = *d;
    cfg.start_date = parse_date_arg(start, "--start");
    cfg.validate();
    return cfg;
  }
};

}  // namespace privlog::cli
