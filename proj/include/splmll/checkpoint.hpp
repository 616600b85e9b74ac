#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "splmll/trainer.hpp"

namespace splmll {

inline constexpr int kCheckpointFormatVersion = 1;

// Line-oriented text document. Scalars are written as "key value...";
// tensors as "tensor <name> <rows> <cols>" followed by one line per row of
// values in %.17g, which round-trips doubles exactly.
class TensorDocument {
public:
    void set(std::string key, std::string value);
    void set_tensor(std::string name, Matrix value);

    bool has(std::string_view key) const;
    const std::string& get(std::string_view key) const;  // SchemaError if absent
    const Matrix& tensor(std::string_view name) const;   // SchemaError if absent
    bool has_tensor(std::string_view name) const;

    std::string serialize() const;
    static TensorDocument parse(std::string_view text);

private:
    std::vector<std::pair<std::string, std::string>> fields_;
    std::vector<std::pair<std::string, Matrix>> tensors_;
};

void write_embedding(TensorDocument& doc, const EmbeddingParams& params);
EmbeddingParams read_embedding(const TensorDocument& doc);

std::string embedding_to_text(const EmbeddingParams& params);
EmbeddingParams embedding_from_text(std::string_view text);

std::string checkpoint_to_text(const ModelState& state);
ModelState checkpoint_from_text(std::string_view text);

}  // namespace splmll
