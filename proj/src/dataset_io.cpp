#include "splmll/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/QR>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Reads one possibly-quoted token starting at s[pos]; advances pos past it.
std::string read_token(std::string_view s, std::size_t& pos, std::size_t line) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos >= s.size()) throw ParseError("unexpected end of line", line);
    std::string out;
    const char q = s[pos];
    if (q == '\'' || q == '"') {
        ++pos;
        while (pos < s.size() && s[pos] != q) {
            if (s[pos] == '\\' && pos + 1 < s.size()) ++pos;
            out.push_back(s[pos++]);
        }
        if (pos >= s.size()) throw ParseError("unterminated quoted name", line);
        ++pos;
        return out;
    }
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '{') out.push_back(s[pos++]);
    return out;
}

std::string unquote(std::string_view v) {
    v = trim(v);
    if (v.size() >= 2 && (v.front() == '\'' || v.front() == '"') && v.back() == v.front()) {
        return std::string(v.substr(1, v.size() - 2));
    }
    return std::string(v);
}

// Splits on commas that are outside quotes.
std::vector<std::string_view> split_fields(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == '\\') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == ',') {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    out.push_back(s.substr(start));
    return out;
}

double parse_number(std::string_view raw, std::size_t line, std::string_view attribute) {
    const std::string text = unquote(raw);
    if (text == "?") throw ParseError(fmt::format("missing value for attribute '{}'", attribute), line);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw ParseError(fmt::format("non-numeric value '{}' for attribute '{}'", text, attribute), line);
    }
    return value;
}

double parse_label(std::string_view raw, std::size_t line, std::string_view attribute) {
    const std::string text = unquote(raw);
    if (text == "0") return 0.0;
    if (text == "1") return 1.0;
    if (text == "?") throw ParseError(fmt::format("missing value for label '{}'", attribute), line);
    throw ValidationError(fmt::format("label '{}' has value '{}' outside {{0,1}} (line {})", attribute, text, line));
}

bool needs_quotes(std::string_view name) {
    if (name.empty()) return true;
    return std::any_of(name.begin(), name.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '{' || c == '}' || c == '\'' ||
               c == '"' || c == '%' || c == '\\';
    });
}

std::string quote_name(std::string_view name) {
    if (!needs_quotes(name)) return std::string(name);
    std::string out = "'";
    for (char c : name) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

void collect_labels(const boost::property_tree::ptree& node, std::vector<std::string>& out) {
    for (const auto& [key, child] : node) {
        if (key != "label") continue;
        const auto name = child.get_optional<std::string>("<xmlattr>.name");
        if (!name) throw ValidationError("label element without a name attribute");
        out.push_back(*name);
        collect_labels(child, out);  // hierarchical headers nest labels
    }
}

struct Attribute {
    std::string name;
};

std::string header_arff(const MultiLabelDataset& ds, std::string_view relation) {
    std::string out = fmt::format("@relation {}\n\n", quote_name(relation));
    for (const auto& name : ds.feature_names) out += fmt::format("@attribute {} numeric\n", quote_name(name));
    for (const auto& name : ds.label_names) out += fmt::format("@attribute {} {{0,1}}\n", quote_name(name));
    out += "\n@data\n";
    return out;
}

}  // namespace

void MultiLabelDataset::validate() const {
    if (features.rows() < 1) throw ValidationError("dataset has no instances");
    if (features.cols() < 1) throw ValidationError("dataset has no features");
    if (labels.cols() < 2) throw ValidationError(fmt::format("dataset needs at least 2 labels, has {}", labels.cols()));
    if (labels.rows() != features.rows()) {
        throw ValidationError(fmt::format("feature rows {} != label rows {}", features.rows(), labels.rows()));
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
        throw ValidationError("feature name count does not match feature columns");
    }
    if (static_cast<Eigen::Index>(label_names.size()) != labels.cols()) {
        throw ValidationError("label name count does not match label columns");
    }
    if (!((labels.array() == 0.0) || (labels.array() == 1.0)).all()) {
        throw ValidationError("label matrix contains values other than 0 and 1");
    }
}

MultiLabelDataset MultiLabelDataset::subset(const std::vector<Eigen::Index>& rows) const {
    MultiLabelDataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()), labels.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        if (r < 0 || r >= features.rows()) throw ArgumentError(fmt::format("row index {} out of range", r));
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
        out.labels.row(static_cast<Eigen::Index>(i)) = labels.row(r);
    }
    out.feature_names = feature_names;
    out.label_names = label_names;
    return out;
}

std::vector<Eigen::Index> FoldAssignment::members(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < fold_of_instance.size(); ++i) {
        if (fold_of_instance[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

std::vector<Eigen::Index> FoldAssignment::complement(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < fold_of_instance.size(); ++i) {
        if (fold_of_instance[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

void SynthesisConfig::validate() const {
    if (n_instances < 1) throw ArgumentError("n_instances must be >= 1");
    if (n_labels < 2) throw ArgumentError("n_labels must be >= 2");
    if (n_landmarks < 1 || n_landmarks >= n_labels) throw ArgumentError("need 1 <= n_landmarks < n_labels");
    if (n_features < n_landmarks) throw ArgumentError("n_features must be >= n_landmarks");
    if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw ArgumentError("noise_rate must lie in [0, 0.5)");
}

Matrix FeatureScaler::apply(const Matrix& features) const {
    if (features.cols() != mean.size()) {
        throw ArgumentError(fmt::format("scaler fitted on {} features, got {}", mean.size(), features.cols()));
    }
    return (features.rowwise() - mean).array().rowwise() * inv_stddev.array();
}

std::vector<std::string> parse_label_header(std::string_view xml_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(xml_text)};
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("malformed label header: " + e.message(), e.line());
    }
    const auto root = tree.get_child_optional("labels");
    if (!root) throw ParseError("label header lacks a <labels> root element");

    std::vector<std::string> names;
    collect_labels(*root, names);
    if (names.size() < 2) throw ValidationError(fmt::format("label header lists {} labels, need at least 2", names.size()));
    std::unordered_set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw ValidationError("label header contains an empty label name");
        if (!seen.insert(name).second) throw ValidationError("duplicate label name '" + name + "'");
    }
    return names;
}

MultiLabelDataset parse_arff(std::string_view arff_text, const std::vector<std::string>& label_names) {
    std::vector<Attribute> attrs;
    std::vector<std::vector<double>> rows;
    bool in_data = false;

    // Column routing is fixed once @data is reached.
    std::vector<int> label_slot;    // attribute -> label column or -1
    std::vector<int> feature_slot;  // attribute -> feature column or -1
    std::size_t n_features = 0;

    auto finalize_header = [&](std::size_t line) {
        std::unordered_map<std::string, std::size_t> by_name;
        for (std::size_t i = 0; i < attrs.size(); ++i) by_name.emplace(attrs[i].name, i);
        label_slot.assign(attrs.size(), -1);
        feature_slot.assign(attrs.size(), -1);
        for (std::size_t j = 0; j < label_names.size(); ++j) {
            const auto it = by_name.find(label_names[j]);
            if (it == by_name.end()) throw SchemaError("label attribute '" + label_names[j] + "' missing from ARFF");
            if (label_slot[it->second] != -1) throw SchemaError("label '" + label_names[j] + "' listed twice");
            label_slot[it->second] = static_cast<int>(j);
        }
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            if (label_slot[i] == -1) feature_slot[i] = static_cast<int>(n_features++);
        }
        if (n_features == 0) throw SchemaError(fmt::format("ARFF declares no feature attributes (line {})", line));
    };

    std::vector<double> features_flat;
    std::vector<double> labels_flat;
    std::size_t n_rows = 0;
    const std::size_t n_labels = label_names.size();

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= arff_text.size()) {
        std::size_t end = arff_text.find('\n', pos);
        if (end == std::string_view::npos) end = arff_text.size();
        std::string_view line = trim(arff_text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '%') continue;

        if (!in_data) {
            if (line.front() != '@') throw ParseError("expected a header directive", line_no);
            if (istarts_with(line, "@relation")) continue;
            if (istarts_with(line, "@attribute")) {
                std::size_t p = std::string_view("@attribute").size();
                Attribute a;
                a.name = read_token(line, p, line_no);
                const std::string_view type = trim(line.substr(p));
                if (type.empty()) throw ParseError("attribute '" + a.name + "' has no type", line_no);
                if (!(type.front() == '{' || istarts_with(type, "numeric") || istarts_with(type, "real") ||
                      istarts_with(type, "integer"))) {
                    throw ParseError("unsupported type for attribute '" + a.name + "'", line_no);
                }
                attrs.push_back(std::move(a));
                continue;
            }
            if (istarts_with(line, "@data")) {
                finalize_header(line_no);
                in_data = true;
                continue;
            }
            throw ParseError("unknown header directive", line_no);
        }

        features_flat.resize(features_flat.size() + n_features, 0.0);
        labels_flat.resize(labels_flat.size() + n_labels, 0.0);
        double* frow = features_flat.data() + n_rows * n_features;
        double* lrow = labels_flat.data() + n_rows * n_labels;
        auto store = [&](std::size_t attr, std::string_view raw) {
            if (label_slot[attr] >= 0) {
                lrow[label_slot[attr]] = parse_label(raw, line_no, attrs[attr].name);
            } else {
                frow[feature_slot[attr]] = parse_number(raw, line_no, attrs[attr].name);
            }
        };

        if (line.front() == '{') {
            if (line.back() != '}') throw ParseError("unterminated sparse row", line_no);
            const std::string_view body = trim(line.substr(1, line.size() - 2));
            if (!body.empty()) {
                for (std::string_view entry : split_fields(body)) {
                    entry = trim(entry);
                    const auto sep = entry.find_first_of(" \t");
                    if (sep == std::string_view::npos) throw ParseError("sparse entry lacks a value", line_no);
                    std::size_t index = 0;
                    const std::string_view idx = entry.substr(0, sep);
                    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
                    if (ec != std::errc() || ptr != idx.data() + idx.size()) {
                        throw ParseError("bad sparse index '" + std::string(idx) + "'", line_no);
                    }
                    if (index >= attrs.size()) throw ParseError(fmt::format("sparse index {} out of range", index), line_no);
                    store(index, entry.substr(sep + 1));
                }
            }
        } else {
            const auto fields = split_fields(line);
            if (fields.size() != attrs.size()) {
                throw ParseError(fmt::format("row has {} values, expected {}", fields.size(), attrs.size()), line_no);
            }
            for (std::size_t i = 0; i < fields.size(); ++i) store(i, fields[i]);
        }
        ++n_rows;
    }
    if (!in_data) throw ParseError("ARFF has no @data section", line_no);

    MultiLabelDataset ds;
    const auto n = static_cast<Eigen::Index>(n_rows);
    ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        features_flat.data(), n, static_cast<Eigen::Index>(n_features));
    ds.labels = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        labels_flat.data(), n, static_cast<Eigen::Index>(n_labels));
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (feature_slot[i] >= 0) ds.feature_names.push_back(attrs[i].name);
    }
    ds.label_names = label_names;
    ds.validate();
    return ds;
}

MultiLabelDataset load_mulan(const std::string& arff_path, const std::string& xml_path) {
    const auto names = parse_label_header(read_file(xml_path));
    return parse_arff(read_file(arff_path), names);
}

std::string to_dense_arff(const MultiLabelDataset& ds, std::string_view relation) {
    std::string out = header_arff(ds, relation);
    for (Eigen::Index i = 0; i < ds.num_instances(); ++i) {
        for (Eigen::Index j = 0; j < ds.num_features(); ++j) {
            out += fmt::format("{}{:.17g}", j ? "," : "", ds.features(i, j));
        }
        for (Eigen::Index j = 0; j < ds.num_labels(); ++j) out += ds.labels(i, j) != 0.0 ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

std::string to_sparse_arff(const MultiLabelDataset& ds, std::string_view relation) {
    std::string out = header_arff(ds, relation);
    const auto d = ds.num_features();
    for (Eigen::Index i = 0; i < ds.num_instances(); ++i) {
        out += '{';
        bool first = true;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (ds.features(i, j) == 0.0) continue;
            out += fmt::format("{}{} {:.17g}", first ? "" : ",", j, ds.features(i, j));
            first = false;
        }
        for (Eigen::Index j = 0; j < ds.num_labels(); ++j) {
            if (ds.labels(i, j) == 0.0) continue;
            out += fmt::format("{}{} 1", first ? "" : ",", d + j);
            first = false;
        }
        out += "}\n";
    }
    return out;
}

std::string to_label_header(const std::vector<std::string>& label_names) {
    std::string out = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n";
    for (const auto& name : label_names) out += fmt::format("<label name=\"{}\"></label>\n", xml_escape(name));
    out += "</labels>\n";
    return out;
}

double label_cardinality(const MultiLabelDataset& ds) {
    if (ds.labels.rows() == 0) return 0.0;
    return ds.labels.sum() / static_cast<double>(ds.labels.rows());
}

FeatureScaler fit_scaler(const Matrix& features) {
    if (features.rows() < 1) throw ArgumentError("cannot fit a scaler on zero rows");
    FeatureScaler s;
    const double n = static_cast<double>(features.rows());
    s.mean = features.colwise().mean();
    s.inv_stddev.resize(features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const double var = (features.col(j).array() - s.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        s.inv_stddev(j) = sd < kDegenerateStddev ? 0.0 : 1.0 / sd;
    }
    return s;
}

StandardizedDataset standardize_features(const MultiLabelDataset& ds) {
    StandardizedDataset out{ds, fit_scaler(ds.features)};
    out.dataset.features = out.scaler.apply(ds.features);
    return out;
}

FoldAssignment split_folds(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError(fmt::format("need at least 2 folds, got {}", k));
    if (n < k) throw ArgumentError(fmt::format("cannot split {} instances into {} folds", n, k));
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldAssignment out;
    out.num_folds = k;
    out.fold_of_instance.assign(order.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        out.fold_of_instance[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return out;
}

std::string folds_to_csv(const FoldAssignment& folds) {
    std::string out = "instance_index,fold\n";
    for (std::size_t i = 0; i < folds.fold_of_instance.size(); ++i) {
        out += fmt::format("{},{}\n", i, folds.fold_of_instance[i]);
    }
    return out;
}

SynthesizedDataset synthesize(const SynthesisConfig& cfg) {
    cfg.validate();
    const auto n = cfg.n_instances;
    const auto d = cfg.n_features;
    const auto c = cfg.n_labels;
    const auto l = cfg.n_landmarks;
    // Landmark scores sit +-margin away from the threshold so a linear map
    // predicts them almost exactly; OR/AND combinations are not linear.
    constexpr double margin = 3.0;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    Matrix gauss(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) gauss(i, j) = normal(rng);
    const Matrix rotation = Eigen::HouseholderQR<Matrix>(gauss).householderQ();

    Matrix latent(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            const double centre = k < l ? (coin(rng) ? margin : -margin) : 0.0;
            latent(i, k) = centre + normal(rng);
        }
    }
    // latent = X * rotation^T, so landmark k is the sign of X * rotation.row(k)^T.
    const Matrix features = latent * rotation;
    const Matrix directions = rotation.topRows(l).transpose();
    const Matrix scores = features * directions;

    std::vector<Eigen::Index> columns(static_cast<std::size_t>(c));
    std::iota(columns.begin(), columns.end(), Eigen::Index{0});
    std::shuffle(columns.begin(), columns.end(), rng);
    std::vector<Eigen::Index> landmarks(columns.begin(), columns.begin() + l);
    std::vector<Eigen::Index> others(columns.begin() + l, columns.end());
    std::sort(landmarks.begin(), landmarks.end());

    Matrix labels = Matrix::Zero(n, c);
    for (Eigen::Index k = 0; k < l; ++k) {
        labels.col(landmarks[static_cast<std::size_t>(k)]) = (scores.col(k).array() > 0.0).cast<double>();
    }
    std::uniform_int_distribution<Eigen::Index> pick(0, l - 1);
    for (const auto col : others) {
        if (l == 1) {
            labels.col(col) = labels.col(landmarks[0]);
            continue;
        }
        const auto a = landmarks[static_cast<std::size_t>(pick(rng))];
        auto b = a;
        while (b == a) b = landmarks[static_cast<std::size_t>(pick(rng))];
        if (coin(rng)) {
            labels.col(col) = labels.col(a).cwiseMax(labels.col(b));
        } else {
            labels.col(col) = labels.col(a).cwiseProduct(labels.col(b));
        }
    }
    if (cfg.noise_rate > 0.0) {
        std::bernoulli_distribution flip(cfg.noise_rate);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (flip(rng)) labels(i, j) = 1.0 - labels(i, j);
    }

    SynthesizedDataset out;
    out.dataset.features = features;
    out.dataset.labels = labels;
    for (Eigen::Index j = 0; j < d; ++j) out.dataset.feature_names.push_back(fmt::format("feature_{}", j));
    for (Eigen::Index j = 0; j < c; ++j) out.dataset.label_names.push_back(fmt::format("label_{}", j));
    out.landmarks = std::move(landmarks);
    return out;
}

}  // namespace splmll
