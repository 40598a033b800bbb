#include "ager/text_provider.hpp"

#include "ager/errors.hpp"
#include "ager/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ager {

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    if (n < 1e-12) throw ZeroVectorError("text embedding has zero norm");
    for (double& x : v) x /= n;
}
}  // namespace

TextProvider::TextProvider(uint64_t seed, int dim_txt, int dim_word,
                           const std::vector<std::string>& vocabulary)
    : seed_(seed), dim_txt_(dim_txt), dim_word_(dim_word) {
    // Pre-draw the vocabulary in order, redrawing any vector whose |cosine|
    // against an already accepted one reaches the bound. The greedy order is
    // fixed, so the result is deterministic per seed.
    std::vector<std::string> accepted_prompts;
    for (const auto& name : vocabulary) {
        const std::string pr = prompt(name);
        uint64_t attempt = 0;
        std::vector<double> v;
        for (;;) {
            v = draw_unit(pr, "txt", dim_txt_, attempt++);
            bool ok = true;
            for (const auto& other : accepted_prompts)
                if (std::abs(dot(v, txt_table_.at(other))) >= kMaxPairwiseCos) ok = false;
            if (ok) break;
        }
        txt_table_[pr] = v;
        accepted_prompts.push_back(pr);
    }
    std::vector<std::string> accepted_names;
    for (const auto& name : vocabulary) {
        uint64_t attempt = 0;
        std::vector<double> v;
        for (;;) {
            v = draw_unit(name, "word", dim_word_, attempt++);
            bool ok = true;
            for (const auto& other : accepted_names)
                if (std::abs(dot(v, word_table_.at(other))) >= kMaxPairwiseCos) ok = false;
            if (ok) break;
        }
        word_table_[name] = v;
        accepted_names.push_back(name);
    }
}

std::string TextProvider::prompt(const std::string& class_name) {
    if (class_name.empty()) throw EmptyNameError("prompt: empty class name");
    return "A photo of a " + class_name;
}

std::vector<double> TextProvider::draw_unit(const std::string& key, const std::string& space,
                                            int dim, uint64_t attempt) const {
    auto rng = derive_rng(seed_, space, fnv1a64(key), attempt);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(static_cast<size_t>(dim));
    for (double& x : v) x = gauss(rng);
    normalize(v);
    return v;
}

TextEmbedding TextProvider::embed(const std::string& prompt_text) const {
    auto it = txt_table_.find(prompt_text);
    if (it != txt_table_.end()) return {it->second, prompt_text};
    return {draw_unit(prompt_text, "txt", dim_txt_, 0), prompt_text};
}

std::vector<double> TextProvider::word_vector(const std::string& class_name) const {
    if (class_name.empty()) throw EmptyNameError("word_vector: empty class name");
    auto it = word_table_.find(class_name);
    if (it != word_table_.end()) return it->second;
    return draw_unit(class_name, "word", dim_word_, 0);
}

void TextProvider::load_table(const std::string& path, const std::string& kind) {
    const bool is_txt = kind == "txt";
    if (!is_txt && kind != "word") throw ProviderError("load_table: kind must be txt or word");
    const int want_dim = is_txt ? dim_txt_ : dim_word_;
    std::ifstream in(path);
    if (!in) throw ProviderError("load_table: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("embedding table line " + std::to_string(line_no) + ": missing tab");
        const std::string name = line.substr(0, tab);
        std::vector<double> v;
        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                v.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw FormatError("embedding table line " + std::to_string(line_no) +
                                  ": bad number '" + tok + "'");
            }
        }
        if (static_cast<int>(v.size()) != want_dim)
            throw FormatError("embedding table line " + std::to_string(line_no) + ": expected " +
                              std::to_string(want_dim) + " dims, got " +
                              std::to_string(v.size()));
        normalize(v);
        if (is_txt) {
            // key both the bare name and its prompt so class lookups work
            txt_table_[name] = v;
            txt_table_[prompt(name)] = v;
        } else {
            word_table_[name] = v;
        }
    }
}

}  // namespace ager
