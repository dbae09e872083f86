#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tokgain/error.hpp"
#include "tokgain/fixtures.hpp"
#include "tokgain/gain.hpp"
#include "tokgain/phi.hpp"
#include "tokgain/tokenizer.hpp"
#include "tokgain/util.hpp"

namespace fs = std::filesystem;
using namespace tokgain;

namespace {

void write_demo(const std::string& out, bool augmented) {
    Tokenizer tok = fixtures::demo_tokenizer();
    if (augmented) tok = tok.with_added_tokens(fixtures::demo_added_words());
    tok.save(out);
    std::cout << "wrote " << out << "\n";
}

void write_corpus(const std::string& dir, const std::string& kind,
                  std::uint64_t seed, std::size_t bytes) {
    std::vector<std::string> docs;
    if (kind == "general") {
        docs = fixtures::generate_general_text(seed, bytes);
    } else if (kind == "domain") {
        docs = fixtures::generate_domain_text(seed, bytes);
    } else {
        throw input_error("unknown corpus kind '" + kind +
                          "' (expected general or domain)");
    }
    fs::create_directories(dir);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "doc_%04zu.txt", i);
        write_text_file(fs::path(dir) / name, docs[i]);
    }
    std::cout << "wrote " << docs.size() << " document(s) to " << dir << "\n";
}

void write_annotation_file(const std::string& table_path, const std::string& out,
                           std::size_t count, std::uint64_t seed) {
    GainTable table = read_gain_table(table_path);
    std::vector<AnnotatedWord> ann = fixtures::generate_annotations(table, count, seed);
    write_annotations(ann, out);
    std::cout << "wrote " << ann.size() << " annotation(s) to " << out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic fixture generator for the tokenizer pipeline"};
    app.require_subcommand(1);

    std::string demo_out = "demo_tokenizer.json";
    bool demo_augmented = false;
    CLI::App* demo = app.add_subcommand(
        "demo-tokenizer", "write the handcrafted showcase tokenizer");
    demo->add_option("--out", demo_out, "output file")->capture_default_str();
    demo->add_flag("--augmented", demo_augmented,
                   "include the showcase added tokens");

    std::string corpus_dir = "corpus";
    std::string corpus_kind = "domain";
    std::uint64_t corpus_seed = 0;
    std::size_t corpus_bytes = 1 << 20;
    CLI::App* corpus = app.add_subcommand(
        "corpus", "write a synthetic corpus as one file per document");
    corpus->add_option("--dir", corpus_dir, "output directory")->capture_default_str();
    corpus->add_option("--kind", corpus_kind, "general or domain")
        ->capture_default_str();
    corpus->add_option("--seed", corpus_seed, "generation seed")->capture_default_str();
    corpus->add_option("--bytes", corpus_bytes, "approximate total size")
        ->capture_default_str();

    std::string ann_table;
    std::string ann_out = "annotations.tsv";
    std::size_t ann_count = 600;
    std::uint64_t ann_seed = 0;
    CLI::App* ann = app.add_subcommand(
        "annotations", "score table words with the fixture rubric");
    ann->add_option("--table", ann_table, "gain table file")->required();
    ann->add_option("--out", ann_out, "output file")->capture_default_str();
    ann->add_option("--count", ann_count, "maximum words to score")
        ->capture_default_str();
    ann->add_option("--seed", ann_seed, "jitter seed")->capture_default_str();

    try {
        app.parse(argc, argv);
        if (demo->parsed()) write_demo(demo_out, demo_augmented);
        if (corpus->parsed()) write_corpus(corpus_dir, corpus_kind, corpus_seed,
                                           corpus_bytes);
        if (ann->parsed()) write_annotation_file(ann_table, ann_out, ann_count,
                                                 ann_seed);
        return 0;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
