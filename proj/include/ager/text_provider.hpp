#pragma once

// Deterministic offline source of text representations. Class names map to
// fixed unit-norm Gaussian vectors derived from the provider seed; for the
// configured vocabulary the provider redraws until all pairwise |cosine|
// values are below 0.3. An external name -> vector table can be loaded to
// substitute real embeddings without code changes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ager {

struct TextEmbedding {
    std::vector<double> vector;  // unit L2 norm
    std::string source_prompt;
};

class TextProvider {
  public:
    static constexpr double kMaxPairwiseCos = 0.3;

    TextProvider(uint64_t seed, int dim_txt, int dim_word,
                 const std::vector<std::string>& vocabulary);

    static std::string prompt(const std::string& class_name);

    TextEmbedding embed(const std::string& prompt) const;
    std::vector<double> word_vector(const std::string& class_name) const;

    // name<TAB>v1,v2,... records; vectors are L2-normalized on load.
    // `kind` selects which space the table feeds ("txt" or "word").
    void load_table(const std::string& path, const std::string& kind);

    int dim_txt() const { return dim_txt_; }
    int dim_word() const { return dim_word_; }

  private:
    std::vector<double> draw_unit(const std::string& key, const std::string& space, int dim,
                                  uint64_t attempt) const;
    std::vector<double> vocab_vector(const std::string& key, const std::string& space, int dim,
                                     std::map<std::string, std::vector<double>>& table,
                                     const std::vector<std::string>& keys) const;

    uint64_t seed_;
    int dim_txt_;
    int dim_word_;
    std::map<std::string, std::vector<double>> txt_table_;   // keyed by prompt
    std::map<std::string, std::vector<double>> word_table_;  // keyed by class name
};

}  // namespace ager
