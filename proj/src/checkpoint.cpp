#include "splmll/checkpoint.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

constexpr std::string_view kMagic = "# splmll checkpoint";

std::vector<std::string_view> words(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <class T>
T parse_value(std::string_view text, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("bad numeric value '" + std::string(text) + "' in checkpoint", line);
    }
    return value;
}

Eigen::Index parse_index(const std::string& text) {
    return parse_value<Eigen::Index>(text, 0);
}

std::string layer_key(const EmbeddingParams& p, const char* kind, std::size_t l) {
    return p.variant == Variant::linear ? std::string(kind) : fmt::format("{}{}", kind, l + 1);
}

}  // namespace

void TensorDocument::set(std::string key, std::string value) {
    for (auto& [k, v] : fields_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    fields_.emplace_back(std::move(key), std::move(value));
}

void TensorDocument::set_tensor(std::string name, Matrix value) {
    for (auto& [k, v] : tensors_) {
        if (k == name) {
            v = std::move(value);
            return;
        }
    }
    tensors_.emplace_back(std::move(name), std::move(value));
}

bool TensorDocument::has(std::string_view key) const {
    return std::any_of(fields_.begin(), fields_.end(), [&](const auto& f) { return f.first == key; });
}

const std::string& TensorDocument::get(std::string_view key) const {
    for (const auto& [k, v] : fields_)
        if (k == key) return v;
    throw SchemaError("checkpoint lacks field '" + std::string(key) + "'");
}

bool TensorDocument::has_tensor(std::string_view name) const {
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const auto& t) { return t.first == name; });
}

const Matrix& TensorDocument::tensor(std::string_view name) const {
    for (const auto& [k, v] : tensors_)
        if (k == name) return v;
    throw SchemaError("checkpoint lacks tensor '" + std::string(name) + "'");
}

std::string TensorDocument::serialize() const {
    std::string out(kMagic);
    out += '\n';
    for (const auto& [k, v] : fields_) out += fmt::format("{} {}\n", k, v);
    for (const auto& [name, m] : tensors_) {
        out += fmt::format("tensor {} {} {}\n", name, m.rows(), m.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) out += fmt::format("{}{:.17g}", j ? " " : "", m(i, j));
            out += '\n';
        }
    }
    out += "end\n";
    return out;
}

TensorDocument TensorDocument::parse(std::string_view text) {
    TensorDocument doc;
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (lines.empty() || lines.front() != kMagic) throw ParseError("not a checkpoint document", 1);
    bool ended = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto w = words(lines[i]);
        if (w.empty()) continue;
        if (w[0] == "end") {
            ended = true;
            break;
        }
        if (w[0] != "tensor") {
            std::string value;
            for (std::size_t k = 1; k < w.size(); ++k) value += (k > 1 ? " " : "") + std::string(w[k]);
            doc.set(std::string(w[0]), value);
            continue;
        }
        if (w.size() != 4) throw ParseError("tensor header must be 'tensor <name> <rows> <cols>'", i + 1);
        const auto rows = parse_value<Eigen::Index>(w[2], i + 1);
        const auto cols = parse_value<Eigen::Index>(w[3], i + 1);
        if (rows < 0 || cols < 0) throw ParseError("negative tensor shape", i + 1);
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            ++i;
            if (i >= lines.size()) throw ParseError("truncated tensor '" + std::string(w[1]) + "'", i);
            const auto values = words(lines[i]);
            if (static_cast<Eigen::Index>(values.size()) != cols) {
                throw ParseError(fmt::format("tensor row has {} values, expected {}", values.size(), cols), i + 1);
            }
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_value<double>(values[static_cast<std::size_t>(c)], i + 1);
        }
        doc.set_tensor(std::string(w[1]), std::move(m));
    }
    if (!ended) throw ParseError("checkpoint is missing its 'end' marker");
    return doc;
}

void write_embedding(TensorDocument& doc, const EmbeddingParams& params) {
    params.validate();
    doc.set("variant", std::string(to_string(params.variant)));
    doc.set("input_dim", std::to_string(params.input_dim()));
    doc.set("num_labels", std::to_string(params.output_dim()));
    std::string widths;
    for (auto w : params.hidden_widths()) widths += (widths.empty() ? "" : " ") + std::to_string(w);
    doc.set("hidden_widths", widths.empty() ? "none" : widths);
    doc.set("leaky_slope", fmt::format("{:.17g}", params.leaky_slope));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        doc.set_tensor(layer_key(params, "W", l), params.layers[l].weight);
        doc.set_tensor(layer_key(params, "b", l), params.layers[l].bias);
    }
}

EmbeddingParams read_embedding(const TensorDocument& doc) {
    EmbeddingParams p;
    p.variant = parse_variant(doc.get("variant"));
    p.leaky_slope = parse_value<double>(doc.get("leaky_slope"), 0);
    std::size_t n_layers = 1;
    if (p.variant == Variant::mlp) {
        const auto widths = words(doc.get("hidden_widths"));
        n_layers = widths.size() + 1;
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& bias = doc.tensor(layer_key(p, "b", l));
        if (bias.rows() != 1) throw SchemaError("bias tensors must have a single row");
        p.layers.push_back({doc.tensor(layer_key(p, "W", l)), bias.row(0)});
    }
    p.validate();
    if (p.input_dim() != parse_index(doc.get("input_dim")) || p.output_dim() != parse_index(doc.get("num_labels"))) {
        throw SchemaError("checkpoint dimensions disagree with its tensors");
    }
    return p;
}

std::string embedding_to_text(const EmbeddingParams& params) {
    TensorDocument doc;
    write_embedding(doc, params);
    return doc.serialize();
}

EmbeddingParams embedding_from_text(std::string_view text) { return read_embedding(TensorDocument::parse(text)); }

std::string checkpoint_to_text(const ModelState& state) {
    state.validate();
    TensorDocument doc;
    doc.set("format_version", std::to_string(kCheckpointFormatVersion));
    write_embedding(doc, state.theta);
    doc.set("standardized", state.scaler ? "1" : "0");
    doc.set_tensor("B", state.B);
    doc.set_tensor("A", state.A);
    if (state.scaler) {
        doc.set_tensor("feature_mean", state.scaler->mean);
        doc.set_tensor("feature_inv_stddev", state.scaler->inv_stddev);
    }
    return doc.serialize();
}

ModelState checkpoint_from_text(std::string_view text) {
    const auto doc = TensorDocument::parse(text);
    const auto version = parse_index(doc.get("format_version"));
    if (version != kCheckpointFormatVersion) {
        throw SchemaError(fmt::format("unsupported checkpoint format_version {}", version));
    }
    ModelState state;
    state.theta = read_embedding(doc);
    state.B = doc.tensor("B");
    state.A = doc.tensor("A");
    if (doc.get("standardized") == "1") {
        const Matrix& mean = doc.tensor("feature_mean");
        const Matrix& inv = doc.tensor("feature_inv_stddev");
        if (mean.rows() != 1 || inv.rows() != 1) throw SchemaError("scaler tensors must have a single row");
        state.scaler = FeatureScaler{mean.row(0), inv.row(0)};
    }
    try {
        state.validate();
    } catch (const ValidationError& e) {
        throw SchemaError(std::string("inconsistent checkpoint: ") + e.what());
    }
    return state;
}

}  // namespace splmll
