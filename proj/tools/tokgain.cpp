#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tokgain/augment.hpp"
#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/fixtures.hpp"
#include "tokgain/gain.hpp"
#include "tokgain/lm.hpp"
#include "tokgain/phi.hpp"
#include "tokgain/report.hpp"
#include "tokgain/tokenizer.hpp"
#include "tokgain/util.hpp"

namespace fs = std::filesystem;
using namespace tokgain;

namespace {

std::string default_out() {
    const char* env = std::getenv("TOKGAIN_OUT");
    return env && *env ? env : ".";
}

bool has_wildcards(const std::string& s) {
    return s.find_first_of("*?") != std::string::npos;
}

std::regex wildcard_regex(const std::string& pattern) {
    std::string re;
    for (char c : pattern) {
        if (c == '*') {
            re += ".*";
        } else if (c == '?') {
            re += '.';
        } else if (std::string("\\^$.|?*+()[]{}").find(c) != std::string::npos) {
            re += '\\';
            re += c;
        } else {
            re += c;
        }
    }
    return std::regex(re);
}

// Files for one corpus argument: a file, a directory (recursive) or a
// pattern with * and ? in its final component. Each expansion is sorted.
std::vector<std::string> expand_corpus_arg(const std::string& arg) {
    std::vector<std::string> out;
    fs::path p(arg);
    if (has_wildcards(arg)) {
        fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
        if (has_wildcards(dir.string())) {
            throw input_error("wildcards are only supported in the file name: " + arg);
        }
        if (!fs::is_directory(dir)) {
            throw input_error("corpus directory not found: " + dir.string());
        }
        std::regex re = wildcard_regex(p.filename().string());
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() &&
                std::regex_match(entry.path().filename().string(), re)) {
                out.push_back(entry.path().string());
            }
        }
        if (out.empty()) throw input_error("no corpus files match: " + arg);
    } else if (fs::is_directory(p)) {
        for (const auto& entry : fs::recursive_directory_iterator(p)) {
            if (entry.is_regular_file()) out.push_back(entry.path().string());
        }
        if (out.empty()) throw input_error("corpus directory is empty: " + arg);
    } else if (fs::is_regular_file(p)) {
        out.push_back(p.string());
    } else {
        throw input_error("corpus path not found: " + arg);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Corpus load_corpus_args(const std::vector<std::string>& args) {
    std::vector<std::string> files;
    std::set<std::string> seen;
    for (const std::string& arg : args) {
        for (std::string& f : expand_corpus_arg(arg)) {
            if (seen.insert(f).second) files.push_back(std::move(f));
        }
    }
    std::vector<std::string> docs;
    docs.reserve(files.size());
    for (const std::string& f : files) docs.push_back(read_text_file(f));
    std::cout << "corpus: " << files.size() << " file(s)\n";
    return make_corpus(std::move(docs));
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir)) {
        throw input_error("cannot create output directory " + dir.string() + ": " +
                          ec.message());
    }
    return dir;
}

void note(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

void persist_config(CLI::App& app, const fs::path& out_dir, const std::string& name) {
    fs::path path = out_dir / name;
    write_text_file(path, app.config_to_str(true, false));
    note(path);
}

MaskMode parse_mask(const std::string& name) {
    if (name == "full") return MaskMode::full;
    if (name == "second_half") return MaskMode::second_half;
    throw input_error("unknown mask mode '" + name + "' (expected full or second_half)");
}

struct AnalyzeOpts {
    std::vector<std::string> corpus;
    std::string tokenizer;
    std::uint64_t train_size = 0;
    std::uint64_t alpha = 8;
    std::string out = default_out();
};

void cmd_analyze(CLI::App& app, const AnalyzeOpts& o) {
    if (o.tokenizer.empty() == (o.train_size == 0)) {
        throw input_error("exactly one of --tokenizer and --train-size is required");
    }
    fs::path out_dir = ensure_out_dir(o.out);
    Corpus corpus = load_corpus_args(o.corpus);

    const bool trained = o.tokenizer.empty();
    Tokenizer tok = trained ? Tokenizer::train_bpe(corpus, o.train_size)
                            : Tokenizer::load(o.tokenizer);
    if (trained) {
        tok.save(out_dir / "tokenizer.json");
        note(out_dir / "tokenizer.json");
    }

    WordCounts counts = word_counts(corpus);
    GainTable table = build_gain_table(tok, counts, o.alpha);
    write_gain_table(table, out_dir / "gain_table.tsv");
    note(out_dir / "gain_table.tsv");

    BigramCounts bigrams;
    for (const std::string& doc : corpus.documents) {
        accumulate_bigrams(tok.encode(doc), bigrams);
    }
    ContextGainSummary context = mean_context_gain(corpus, table);

    nlohmann::json j;
    j["documents"] = corpus.documents.size();
    j["total_words"] = corpus.total_words;
    j["total_chars"] = corpus.total_chars;
    j["unique_words"] = counts.entries.size();
    j["vocab_size"] = tok.total_vocab_size();
    j["alpha"] = o.alpha;
    if (bigrams.empty()) {
        j["conditional_entropy_nats"] = nullptr;
        std::cout << "conditional entropy skipped: corpus has no token bigrams\n";
    } else {
        j["conditional_entropy_nats"] = conditional_entropy(bigrams);
    }
    j["context_windows"] = context.windows;
    j["mean_context_gain_nats"] = context.mean_gain;
    write_text_file(out_dir / "analysis.json", j.dump(2) + "\n");
    note(out_dir / "analysis.json");

    if (!table.records.empty()) {
        std::cout << "top gain: '" << table.records.front().word << "' ("
                  << format_double(table.records.front().gain) << " nats)\n";
    }
    persist_config(app, out_dir, "analyze_config.ini");
}

struct SelectOpts {
    std::string table;
    std::string kind = "threshold";
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
    std::string phi_model;
    std::string out = default_out();
};

void cmd_select(CLI::App& app, const SelectOpts& o) {
    fs::path out_dir = ensure_out_dir(o.out);
    GainTable table = read_gain_table(o.table);
    Selection sel;
    if (parse_selection_kind(o.kind) == SelectionKind::threshold) {
        sel = select_threshold(table, o.epsilon);
    } else {
        if (o.phi_model.empty()) {
            throw input_error("heuristic selection requires --phi-model");
        }
        PhiModel model = load_phi_model(o.phi_model);
        sel = select_heuristic(table, model, o.epsilon_prime);
    }
    write_selection(sel, out_dir / "selection.json");
    note(out_dir / "selection.json");
    std::cout << "selected " << sel.entries.size() << " of " << table.records.size()
              << " words\n";
    persist_config(app, out_dir, "select_config.ini");
}

struct TrainPhiOpts {
    std::string table;
    std::string annotations;
    std::uint32_t hidden = 16;
    std::uint32_t epochs = 2000;
    double lr = 1e-3;
    double ridge = 1e-4;
    std::uint64_t seed = 0;
    std::string out = default_out();
};

void cmd_train_phi(CLI::App& app, const TrainPhiOpts& o) {
    fs::path out_dir = ensure_out_dir(o.out);
    GainTable table = read_gain_table(o.table);
    std::vector<AnnotatedWord> ann = read_annotations(o.annotations);
    PhiTrainConfig cfg;
    cfg.hidden = o.hidden;
    cfg.epochs = o.epochs;
    cfg.lr = o.lr;
    cfg.ridge_lambda = o.ridge;
    cfg.seed = o.seed;
    PhiModel model = train_phi(ann, table, cfg);
    save_phi_model(model, out_dir / "phi_model.json");
    note(out_dir / "phi_model.json");
    std::cout << "final loss: " << format_double(model.final_loss) << " over "
              << ann.size() << " annotations\n";
    persist_config(app, out_dir, "train_phi_config.ini");
}

struct AugmentOpts {
    std::string tokenizer;
    std::string selection;
    std::int64_t cap = -1;
    std::vector<std::string> corpus;
    std::string out = default_out();
};

void cmd_augment(CLI::App& app, const AugmentOpts& o) {
    if (o.cap < -1) throw input_error("--cap may not be negative");
    fs::path out_dir = ensure_out_dir(o.out);
    Tokenizer base = Tokenizer::load(o.tokenizer);
    Selection sel = read_selection(o.selection);
    std::optional<std::size_t> cap;
    if (o.cap >= 0) cap = static_cast<std::size_t>(o.cap);

    ExtendResult ext = extend_vocab(base, sel, cap);
    ext.tokenizer.save(out_dir / "augmented_tokenizer.json");
    note(out_dir / "augmented_tokenizer.json");

    write_embedding_init_plan(embedding_init_plan(base, ext.tokenizer),
                              out_dir / "embedding_init_plan.json");
    note(out_dir / "embedding_init_plan.json");

    Corpus corpus = load_corpus_args(o.corpus);
    SavingsStats savings = savings_report(base, ext.tokenizer, corpus);
    write_savings(savings, out_dir / "savings.json");
    note(out_dir / "savings.json");

    std::cout << "added " << (ext.tokenizer.added_tokens().size() -
                              base.added_tokens().size())
              << " token(s), skipped " << ext.skipped << " already-atomic word(s)\n";
    std::cout << "tokens: base " << savings.base_tokens << ", augmented "
              << savings.augmented_tokens << ", saved " << savings.saved_tokens << " ("
              << format_double(savings.saved_pct) << "%)\n";
    persist_config(app, out_dir, "augment_config.ini");
}

struct LmOpts {
    std::vector<std::string> corpus;
    std::string tokenizer;
    std::string augmented_tokenizer;
    std::uint32_t context = 8;
    std::uint32_t dim = 16;
    std::uint32_t epochs = 3;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::string mask = "full";
    std::string out = default_out();
};

TrainReport run_lm(const Corpus& corpus, const std::string& tok_path,
                   const LmOpts& o, const std::string& label, const fs::path& out_dir) {
    Tokenizer tok = Tokenizer::load(tok_path);
    LmModel model =
        LmModel::random_init(tok.total_vocab_size(), o.context, o.dim, o.seed);
    LmTrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    cfg.mask = parse_mask(o.mask);
    TrainReport report = train_lm(model, corpus, tok, cfg, label);
    write_train_report(report, out_dir / ("train_report_" + label + ".json"));
    note(out_dir / ("train_report_" + label + ".json"));
    write_loss_curve(report, out_dir / ("loss_curve_" + label + ".csv"));
    note(out_dir / ("loss_curve_" + label + ".csv"));
    std::cout << label << ": " << report.total_tokens << " tokens, final loss "
              << format_double(report.final_ma_loss) << ", "
              << format_double(report.wall_seconds) << " s\n";
    return report;
}

void cmd_lm(CLI::App& app, const LmOpts& o) {
    fs::path out_dir = ensure_out_dir(o.out);
    Corpus corpus = load_corpus_args(o.corpus);
    TrainReport baseline = run_lm(corpus, o.tokenizer, o, "baseline", out_dir);
    if (!o.augmented_tokenizer.empty()) {
        TrainReport augmented =
            run_lm(corpus, o.augmented_tokenizer, o, "augmented", out_dir);
        ComparisonStats cmp = compare_runs(baseline, augmented);
        write_comparison(cmp, out_dir / "comparison.json");
        note(out_dir / "comparison.json");
        std::cout << "augmented vs baseline: tokens "
                  << format_double(cmp.tokens_delta_pct) << "%, time "
                  << format_double(cmp.time_delta_pct) << "%, final loss "
                  << format_double(cmp.final_loss_delta_pct) << "%\n";
    }
    persist_config(app, out_dir, "lm_config.ini");
}

struct ReportOpts {
    std::string table;
    std::string selection;
    std::string savings;
    std::vector<std::string> train_reports;
    std::string comparison;
    std::size_t bins = 20;
    std::string out = default_out();
};

void cmd_report(CLI::App& app, const ReportOpts& o) {
    fs::path out_dir = ensure_out_dir(o.out);
    ReportInputs in;
    if (!o.table.empty()) in.gain_table = o.table;
    if (!o.selection.empty()) in.selection = o.selection;
    if (!o.savings.empty()) in.savings = o.savings;
    for (const std::string& r : o.train_reports) in.train_reports.push_back(r);
    if (!o.comparison.empty()) in.comparison = o.comparison;
    in.histogram_bins = o.bins;
    for (const std::string& name : bundle_report(in, out_dir)) {
        note(out_dir / name);
    }
    persist_config(app, out_dir, "report_config.ini");
}

struct DemoOpts {
    std::string tokenizer;
    std::string augmented_tokenizer;
    std::string text = fixtures::demo_sentence();
    std::string out = default_out();
};

void cmd_demo(CLI::App& app, CLI::App& sub, const DemoOpts& o) {
    if (o.tokenizer.empty() != o.augmented_tokenizer.empty()) {
        throw input_error(
            "--tokenizer and --augmented-tokenizer must be given together");
    }
    Tokenizer base = o.tokenizer.empty() ? fixtures::demo_tokenizer()
                                         : Tokenizer::load(o.tokenizer);
    Tokenizer augmented = o.tokenizer.empty()
                              ? base.with_added_tokens(fixtures::demo_added_words())
                              : Tokenizer::load(o.augmented_tokenizer);
    DemoOutput demo = render_demo(base, augmented, o.text);
    std::cout << render_demo_text(demo);
    if (sub.count("--out") > 0) {
        fs::path out_dir = ensure_out_dir(o.out);
        write_demo_json(demo, out_dir / "demo.json");
        note(out_dir / "demo.json");
        persist_config(app, out_dir, "demo_config.ini");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"information-gain driven tokenizer augmentation pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "read options from an INI file (place before the subcommand)");

    AnalyzeOpts an;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "build a word gain table from a corpus");
    analyze->add_option("--corpus", an.corpus,
                        "corpus files, directories or name patterns")
        ->required();
    analyze->add_option("--tokenizer", an.tokenizer, "tokenizer file to score with");
    analyze->add_option("--train-size", an.train_size,
                        "train a byte-pair tokenizer of this vocabulary size")
        ->capture_default_str();
    analyze->add_option("--alpha", an.alpha, "context window length in words")
        ->capture_default_str();
    analyze->add_option("--out", an.out, "output directory")->capture_default_str();

    SelectOpts se;
    CLI::App* select = app.add_subcommand(
        "select", "pick words for vocabulary extension from a gain table");
    select->add_option("--table", se.table, "gain table file")->required();
    select->add_option("--kind", se.kind, "selection kind: threshold or heuristic")
        ->capture_default_str();
    select->add_option("--epsilon", se.epsilon, "gain cutoff for threshold selection")
        ->capture_default_str();
    select->add_option("--epsilon-prime", se.epsilon_prime,
                       "score cutoff for heuristic selection")
        ->capture_default_str();
    select->add_option("--phi-model", se.phi_model, "trained scorer file");
    select->add_option("--out", se.out, "output directory")->capture_default_str();

    TrainPhiOpts tp;
    CLI::App* train_phi_cmd = app.add_subcommand(
        "train-phi", "fit the word desirability scorer to annotations");
    train_phi_cmd->add_option("--table", tp.table, "gain table file")->required();
    train_phi_cmd->add_option("--annotations", tp.annotations,
                              "word<TAB>score annotation file")
        ->required();
    train_phi_cmd->add_option("--hidden", tp.hidden, "hidden layer width")
        ->capture_default_str();
    train_phi_cmd->add_option("--epochs", tp.epochs, "full-batch training steps")
        ->capture_default_str();
    train_phi_cmd->add_option("--lr", tp.lr, "learning rate")->capture_default_str();
    train_phi_cmd->add_option("--ridge", tp.ridge, "weight penalty strength")
        ->capture_default_str();
    train_phi_cmd->add_option("--seed", tp.seed, "initialization seed")
        ->capture_default_str();
    train_phi_cmd->add_option("--out", tp.out, "output directory")
        ->capture_default_str();

    AugmentOpts au;
    CLI::App* augment = app.add_subcommand(
        "augment", "extend a tokenizer with selected words and measure savings");
    augment->add_option("--tokenizer", au.tokenizer, "base tokenizer file")->required();
    augment->add_option("--selection", au.selection, "selection file")->required();
    augment->add_option("--cap", au.cap,
                        "use only the first N selection entries (-1 for all)")
        ->capture_default_str();
    augment->add_option("--corpus", au.corpus,
                        "corpus files, directories or name patterns")
        ->required();
    augment->add_option("--out", au.out, "output directory")->capture_default_str();

    LmOpts lm;
    CLI::App* lm_cmd = app.add_subcommand(
        "lm", "train the reference model and compare tokenizers");
    lm_cmd->add_option("--corpus", lm.corpus,
                       "corpus files, directories or name patterns")
        ->required();
    lm_cmd->add_option("--tokenizer", lm.tokenizer, "baseline tokenizer file")
        ->required();
    lm_cmd->add_option("--augmented-tokenizer", lm.augmented_tokenizer,
                       "augmented tokenizer for the comparison run");
    lm_cmd->add_option("--context", lm.context, "history length in tokens")
        ->capture_default_str();
    lm_cmd->add_option("--dim", lm.dim, "embedding width")->capture_default_str();
    lm_cmd->add_option("--epochs", lm.epochs, "passes over the corpus windows")
        ->capture_default_str();
    lm_cmd->add_option("--lr", lm.lr, "learning rate")->capture_default_str();
    lm_cmd->add_option("--seed", lm.seed, "initialization and shuffle seed")
        ->capture_default_str();
    lm_cmd->add_option("--mask", lm.mask, "loss positions: full or second_half")
        ->capture_default_str();
    lm_cmd->add_option("--out", lm.out, "output directory")->capture_default_str();

    ReportOpts re;
    CLI::App* report = app.add_subcommand(
        "report", "validate stage outputs and assemble a report directory");
    report->add_option("--table", re.table, "gain table file");
    report->add_option("--selection", re.selection, "selection file");
    report->add_option("--savings", re.savings, "savings file");
    report->add_option("--train-report", re.train_reports, "training report file(s)");
    report->add_option("--comparison", re.comparison, "comparison file");
    report->add_option("--bins", re.bins, "gain histogram bin count")
        ->capture_default_str();
    report->add_option("--out", re.out, "report directory")->capture_default_str();

    DemoOpts de;
    CLI::App* demo = app.add_subcommand(
        "demo", "show a sentence under a base and an augmented tokenizer");
    demo->add_option("--tokenizer", de.tokenizer, "base tokenizer file");
    demo->add_option("--augmented-tokenizer", de.augmented_tokenizer,
                     "augmented tokenizer file");
    demo->add_option("--text", de.text, "text to encode")->capture_default_str();
    demo->add_option("--out", de.out, "directory for demo.json")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        if (analyze->parsed()) cmd_analyze(app, an);
        if (select->parsed()) cmd_select(app, se);
        if (train_phi_cmd->parsed()) cmd_train_phi(app, tp);
        if (augment->parsed()) cmd_augment(app, au);
        if (lm_cmd->parsed()) cmd_lm(app, lm);
        if (report->parsed()) cmd_report(app, re);
        if (demo->parsed()) cmd_demo(app, *demo, de);
        return 0;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const invariant_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
