// privlog-gencorpus: deterministic logcat corpus with a ground-truth sidecar.

#include <iostream>

#include "corpus_options.hpp"
#include "privlog/kv.hpp"

using namespace privlog;
using namespace privlog::cli;

int main(int argc, char** argv) {
  CLI::App app{"privlog-gencorpus: synthetic logcat corpus with planted PII"};
  CorpusOptions opts;
  opts.attach(app);
  std::string out, sidecar;
  app.add_option("--out", out, "raw log to write")->required();
  app.add_option("--sidecar", sidecar, "ground-truth CSV (line_no,start,end,type,plaintext)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  return guarded([&] {
    auto corpus = generate_corpus(opts.finish());
    write_file_atomic(out, corpus.text());
    if (!sidecar.empty()) write_file_atomic(sidecar, corpus.sidecar_csv());
    std::cout << "lines=" << corpus.lines.size() << " planted=" << corpus.truth.size() << '\n';
    return 0;
  });
}
