// Drives the installed binaries as real processes, checking exit codes,
// printed output and written artifacts exactly as a shell user sees them.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "tokgain/util.hpp"

#include "test_support.hpp"

using namespace tokgain;

namespace {

namespace fs = std::filesystem;

const std::string kTok = TOKGAIN_BIN;
const std::string kFix = FIXGEN_BIN;

struct CmdResult {
    int code = -1;
    std::string output;
};

// Runs through the shell with stdout and stderr folded into one log file.
CmdResult run_cmd(const std::string& cmd, const fs::path& log) {
    const std::string full = cmd + " > " + log.string() + " 2>&1";
    int status = std::system(full.c_str());
    CmdResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = fs::exists(log) ? read_text_file(log) : std::string();
    return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

// Tiny two-sentence corpus: enough repeated pairs to train a 257-entry
// vocabulary and produce a non-empty gain table.
fs::path write_tiny_corpus(const testsup::TempDir& td) {
    fs::path dir = td.path() / "tiny";
    fs::create_directories(dir);
    write_text_file(dir / "a.txt",
                    "Introduce OpenLane, an EDA tool for OpenLane users.\n"
                    "Introduce OpenLane, an EDA tool for OpenLane users.\n");
    return dir;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("demo prints the bundled example with its token counts") {
    testsup::TempDir td("cli_demo");
    CmdResult r = run_cmd(kTok + " demo", td.path() / "log");
    CHECK(r.code == 0);
    CHECK(contains(r.output, "(13 tokens)"));
    CHECK(contains(r.output, "(8 tokens)"));
    CHECK(contains(r.output, "reduction: 38.46%"));

    fs::path out = td.path() / "demo_out";
    CmdResult w = run_cmd(kTok + " demo --out " + out.string(), td.path() / "log2");
    CHECK(w.code == 0);
    CHECK(fs::exists(out / "demo.json"));
    CHECK(fs::exists(out / "demo_config.ini"));
}

TEST_CASE("the full pipeline runs end to end and leaves every artifact") {
    testsup::TempDir td("cli_pipeline");
    fs::path d = td.path();
    auto at = [&](const std::string& name) { return (d / name).string(); };
    fs::path log = d / "log";

    CHECK(run_cmd(kFix + " corpus --dir " + at("gen") + " --kind general --seed 11" +
                      " --bytes 40960",
                  log)
              .code == 0);
    CHECK(run_cmd(kFix + " corpus --dir " + at("dom") + " --kind domain --seed 12" +
                      " --bytes 61440",
                  log)
              .code == 0);

    CmdResult base = run_cmd(kTok + " analyze --corpus " + at("gen") +
                                 " --train-size 400 --out " + at("base"),
                             log);
    CHECK(base.code == 0);
    CHECK(contains(base.output, "corpus:"));
    CHECK(fs::exists(d / "base" / "tokenizer.json"));
    CHECK(fs::exists(d / "base" / "gain_table.tsv"));
    CHECK(fs::exists(d / "base" / "analysis.json"));
    CHECK(fs::exists(d / "base" / "analyze_config.ini"));

    CmdResult tab = run_cmd(kTok + " analyze --corpus " + at("dom") + " --tokenizer " +
                                at("base") + "/tokenizer.json --out " + at("tab"),
                            log);
    CHECK(tab.code == 0);
    CHECK(contains(tab.output, "top gain:"));
    CHECK(fs::exists(d / "tab" / "gain_table.tsv"));
    CHECK_FALSE(fs::exists(d / "tab" / "tokenizer.json"));
    auto analysis = nlohmann::json::parse(read_text_file(d / "tab" / "analysis.json"));
    CHECK(analysis.at("documents").get<int>() >= 1);
    CHECK(analysis.at("vocab_size").get<int>() >= 300);
    CHECK(analysis.at("conditional_entropy_nats").get<double>() > 0.0);
    CHECK(analysis.at("unique_words").get<int>() > 50);

    std::string table = at("tab") + "/gain_table.tsv";
    CmdResult sel = run_cmd(kTok + " select --table " + table + " --epsilon 0 --out " +
                                at("sel"),
                            log);
    CHECK(sel.code == 0);
    CHECK(contains(sel.output, "selected "));
    CHECK(fs::exists(d / "sel" / "selection.json"));

    CHECK(run_cmd(kFix + " annotations --table " + table + " --out " + at("ann.tsv") +
                      " --count 120 --seed 13",
                  log)
              .code == 0);
    CmdResult phi = run_cmd(kTok + " train-phi --table " + table + " --annotations " +
                                at("ann.tsv") +
                                " --epochs 300 --lr 0.01 --seed 5 --out " + at("phi"),
                            log);
    CHECK(phi.code == 0);
    CHECK(contains(phi.output, "final loss:"));
    CHECK(fs::exists(d / "phi" / "phi_model.json"));

    CmdResult hsel = run_cmd(kTok + " select --table " + table +
                                 " --kind heuristic --phi-model " + at("phi") +
                                 "/phi_model.json --epsilon-prime 1.5 --out " +
                                 at("hsel"),
                             log);
    CHECK(hsel.code == 0);
    auto hjson = nlohmann::json::parse(read_text_file(d / "hsel" / "selection.json"));
    CHECK(hjson.at("kind").get<std::string>() == "heuristic");

    CmdResult aug = run_cmd(kTok + " augment --tokenizer " + at("base") +
                                "/tokenizer.json --selection " + at("sel") +
                                "/selection.json --corpus " + at("dom") +
                                " --cap 50 --out " + at("aug"),
                            log);
    CHECK(aug.code == 0);
    CHECK(contains(aug.output, "added "));
    CHECK(fs::exists(d / "aug" / "augmented_tokenizer.json"));
    CHECK(fs::exists(d / "aug" / "embedding_init_plan.json"));
    auto savings = nlohmann::json::parse(read_text_file(d / "aug" / "savings.json"));
    CHECK(savings.at("saved_pct").get<double>() > 0.0);
    CHECK(savings.at("base_tokens").get<std::uint64_t>() >
          savings.at("augmented_tokens").get<std::uint64_t>());

    CmdResult lm = run_cmd(kTok + " lm --corpus " + at("dom") + " --tokenizer " +
                               at("base") + "/tokenizer.json --augmented-tokenizer " +
                               at("aug") + "/augmented_tokenizer.json" +
                               " --context 4 --dim 8 --epochs 1 --seed 7 --out " +
                               at("lm"),
                           log);
    CHECK(lm.code == 0);
    for (const char* name : {"train_report_baseline.json", "loss_curve_baseline.csv",
                             "train_report_augmented.json", "loss_curve_augmented.csv",
                             "comparison.json"}) {
        CHECK(fs::exists(d / "lm" / name));
    }
    auto cmp = nlohmann::json::parse(read_text_file(d / "lm" / "comparison.json"));
    CHECK(cmp.at("tokens_delta_pct").get<double>() < 0.0);

    CmdResult rep = run_cmd(kTok + " report --table " + table + " --selection " +
                                at("sel") + "/selection.json --savings " + at("aug") +
                                "/savings.json --train-report " + at("lm") +
                                "/train_report_baseline.json --train-report " +
                                at("lm") + "/train_report_augmented.json" +
                                " --comparison " + at("lm") + "/comparison.json" +
                                " --bins 12 --out " + at("rep"),
                            log);
    CHECK(rep.code == 0);
    for (const char* name : {"gain_table.tsv", "selection.json", "savings.json",
                             "train_reports.json", "comparison.json",
                             "gain_histogram.csv", "summary.txt"}) {
        CHECK(fs::exists(d / "rep" / name));
    }
    std::string summary = read_text_file(d / "rep" / "summary.txt");
    CHECK(contains(summary, "baseline"));
    CHECK(contains(summary, "augmented"));
}

TEST_CASE("usage mistakes exit with code 2 and a message") {
    testsup::TempDir td("cli_errors");
    fs::path d = td.path();
    fs::path log = d / "log";
    fs::path tiny = write_tiny_corpus(td);

    CHECK(run_cmd(kTok, log).code == 2);
    CHECK(run_cmd(kTok + " bogus", log).code == 2);
    CHECK(run_cmd(kTok + " --help", log).code == 0);
    CHECK(run_cmd(kTok + " analyze --help", log).code == 0);

    CmdResult both = run_cmd(kTok + " analyze --corpus " + tiny.string() +
                                 " --train-size 300 --tokenizer x.json",
                             log);
    CHECK(both.code == 2);
    CHECK(contains(both.output, "exactly one"));
    CHECK(run_cmd(kTok + " analyze --corpus " + tiny.string(), log).code == 2);
    CHECK(run_cmd(kTok + " analyze --corpus " + (d / "absent").string() +
                      " --train-size 300",
                  log)
              .code == 2);

    CmdResult alpha = run_cmd(kTok + " analyze --corpus " + tiny.string() +
                                  " --train-size 257 --alpha 0 --out " +
                                  (d / "a0").string(),
                              log);
    CHECK(alpha.code == 2);
    CHECK(contains(alpha.output, "error:"));

    // A real gain table for the selection errors below.
    CHECK(run_cmd(kTok + " analyze --corpus " + tiny.string() +
                      " --train-size 257 --out " + (d / "an").string(),
                  log)
              .code == 0);
    std::string table = (d / "an" / "gain_table.tsv").string();

    CHECK(run_cmd(kTok + " select --table " + (d / "nope.tsv").string(), log).code == 2);
    CmdResult kind = run_cmd(kTok + " select --table " + table + " --kind magic", log);
    CHECK(kind.code == 2);
    CHECK(contains(kind.output, "magic"));
    CmdResult heur =
        run_cmd(kTok + " select --table " + table + " --kind heuristic", log);
    CHECK(heur.code == 2);
    CHECK(contains(heur.output, "--phi-model"));

    CHECK(run_cmd(kTok + " augment --tokenizer x --selection y --corpus z --cap -2",
                  log)
              .code == 2);
    CHECK(run_cmd(kTok + " augment", log).code == 2);

    // Cap larger than the selection: an empty threshold selection at a huge
    // cutoff makes any positive cap invalid.
    CHECK(run_cmd(kTok + " select --table " + table + " --epsilon 9999 --out " +
                      (d / "s0").string(),
                  log)
              .code == 0);
    CHECK(run_cmd(kTok + " analyze --corpus " + tiny.string() +
                      " --train-size 257 --out " + (d / "tk").string(),
                  log)
              .code == 0);
    CmdResult cap = run_cmd(kTok + " augment --tokenizer " +
                                (d / "tk" / "tokenizer.json").string() +
                                " --selection " + (d / "s0" / "selection.json").string() +
                                " --corpus " + tiny.string() + " --cap 1",
                            log);
    CHECK(cap.code == 2);

    CHECK(run_cmd(kTok + " demo --tokenizer only.json", log).code == 2);
    CHECK(run_cmd(kTok + " lm --corpus " + tiny.string() + " --tokenizer " +
                      (d / "missing.json").string(),
                  log)
              .code == 2);

    CHECK(run_cmd(kFix + " corpus --kind weird --dir " + (d / "w").string(), log)
              .code == 2);
    CHECK(run_cmd(kFix + " annotations --table " + (d / "absent.tsv").string(), log)
              .code == 2);
}

TEST_CASE("a persisted config replays the selection byte for byte") {
    testsup::TempDir td("cli_replay");
    fs::path d = td.path();
    fs::path log = d / "log";
    fs::path tiny = write_tiny_corpus(td);

    CHECK(run_cmd(kTok + " analyze --corpus " + tiny.string() +
                      " --train-size 257 --out " + (d / "an").string(),
                  log)
              .code == 0);
    CHECK(run_cmd(kTok + " select --table " + (d / "an" / "gain_table.tsv").string() +
                      " --epsilon 0.2 --out " + (d / "s1").string(),
                  log)
              .code == 0);

    // Same run, redirected to a fresh directory via the saved config.
    std::string ini = read_text_file(d / "s1" / "select_config.ini");
    std::string patched;
    std::size_t pos = 0;
    while (pos < ini.size()) {
        std::size_t eol = ini.find('\n', pos);
        if (eol == std::string::npos) eol = ini.size();
        std::string line = ini.substr(pos, eol - pos);
        if (line.rfind("select.out=", 0) == 0) {
            line = "select.out=\"" + (d / "s2").string() + "\"";
        }
        patched += line;
        patched += '\n';
        pos = eol + 1;
    }
    write_text_file(d / "replay.ini", patched);

    CHECK(run_cmd(kTok + " --config " + (d / "replay.ini").string() + " select", log)
              .code == 0);
    CHECK(read_text_file(d / "s2" / "selection.json") ==
          read_text_file(d / "s1" / "selection.json"));
}

TEST_CASE("TOKGAIN_OUT provides the default output directory") {
    testsup::TempDir td("cli_envout");
    fs::path d = td.path();
    fs::path tiny = write_tiny_corpus(td);
    fs::path out = d / "envout";

    CmdResult r = run_cmd("TOKGAIN_OUT=" + out.string() + " " + kTok +
                              " analyze --corpus " + tiny.string() + " --train-size 257",
                          d / "log");
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "tokenizer.json"));
    CHECK(fs::exists(out / "gain_table.tsv"));
    CHECK(fs::exists(out / "analysis.json"));
}

} // TEST_SUITE
