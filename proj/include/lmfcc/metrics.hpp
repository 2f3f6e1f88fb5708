#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "lmfcc/core.hpp"

namespace lmfcc::metrics {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::size_t> counts;

    explicit ConfusionMatrix(std::size_t j = 2) : classes(j), counts(j * j, 0) {}

    std::size_t& at(std::size_t truth, std::size_t pred) { return counts[truth * classes + pred]; }
    std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }

    std::size_t total() const {
        std::size_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth, std::size_t classes = 2) {
    if (preds.size() != truth.size())
        throw std::invalid_argument("confusion: " + std::to_string(preds.size()) + " predictions for " +
                                    std::to_string(truth.size()) + " labels");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(preds[i]) >= classes ||
            static_cast<std::size_t>(truth[i]) >= classes)
            throw std::out_of_range("confusion: label out of range at item " + std::to_string(i));
        ++cm.at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(preds[i]));
    }
    return cm;
}

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // true count
    std::size_t predicted = 0;
};

// 0/0 ratios are taken as 0.
inline ClassScores class_scores(const ConfusionMatrix& cm, std::size_t c) {
    ClassScores s;
    const std::size_t tp = cm.at(c, c);
    for (std::size_t k = 0; k < cm.classes; ++k) {
        s.support += cm.at(c, k);
        s.predicted += cm.at(k, c);
    }
    s.precision = s.predicted ? static_cast<double>(tp) / static_cast<double>(s.predicted) : 0.0;
    s.recall = s.support ? static_cast<double>(tp) / static_cast<double>(s.support) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

enum class Averaging { binary_positive, macro };

/// Binary averaging scores class 1 (attack). Macro averages every class; a
/// class that is neither true nor predicted anywhere scores 0 and is included
/// unless `exclude_absent` is set.
inline double f1(const ConfusionMatrix& cm, Averaging averaging = Averaging::binary_positive,
                 bool exclude_absent = false) {
    if (cm.classes == 0) throw std::invalid_argument("f1: empty confusion matrix");
    if (averaging == Averaging::binary_positive) return class_scores(cm, cm.classes - 1).f1;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < cm.classes; ++c) {
        const auto s = class_scores(cm, c);
        if (exclude_absent && s.support == 0 && s.predicted == 0) continue;
        sum += s.f1;
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

struct MetricsReport {
    ConfusionMatrix cm;
    std::vector<ClassScores> per_class;
    double binary_f1 = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
};

inline MetricsReport make_report(const ConfusionMatrix& cm) {
    MetricsReport r{cm, {}, 0.0, 0.0, 0.0};
    std::size_t correct = 0;
    for (std::size_t c = 0; c < cm.classes; ++c) {
        r.per_class.push_back(class_scores(cm, c));
        correct += cm.at(c, c);
    }
    r.binary_f1 = f1(cm, Averaging::binary_positive);
    r.macro_f1 = f1(cm, Averaging::macro);
    const std::size_t n = cm.total();
    r.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    return r;
}

inline const char* class_name(std::size_t c) { return c == 0 ? "normal" : c == 1 ? "attack" : "class"; }

inline std::string render_table(const MetricsReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << std::left << std::setw(10) << "class" << std::right << std::setw(11) << "precision" << std::setw(11)
       << "recall" << std::setw(11) << "f1" << std::setw(10) << "support" << '\n';
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const auto& s = r.per_class[c];
        os << std::left << std::setw(10) << class_name(c) << std::right << std::setw(11) << s.precision
           << std::setw(11) << s.recall << std::setw(11) << s.f1 << std::setw(10) << s.support << '\n';
    }
    os << '\n'
       << std::left << std::setw(16) << "binary f1" << r.binary_f1 << '\n'
       << std::setw(16) << "macro f1" << r.macro_f1 << '\n'
       << std::setw(16) << "accuracy" << r.accuracy << '\n'
       << std::setw(16) << "items" << r.cm.total() << '\n';
    return os.str();
}

inline std::string render_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "metric,class,value\n";
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        os << "precision," << class_name(c) << ',' << r.per_class[c].precision << '\n';
        os << "recall," << class_name(c) << ',' << r.per_class[c].recall << '\n';
        os << "f1," << class_name(c) << ',' << r.per_class[c].f1 << '\n';
        os << "support," << class_name(c) << ',' << r.per_class[c].support << '\n';
    }
    os << "binary_f1,all," << r.binary_f1 << '\n';
    os << "macro_f1,all," << r.macro_f1 << '\n';
    os << "accuracy,all," << r.accuracy << '\n';
    return os.str();
}

inline std::string render_confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "truth\\pred";
    for (std::size_t c = 0; c < cm.classes; ++c) os << ',' << class_name(c);
    os << '\n';
    for (std::size_t t = 0; t < cm.classes; ++t) {
        os << class_name(t);
        for (std::size_t p = 0; p < cm.classes; ++p) os << ',' << cm.at(t, p);
        os << '\n';
    }
    return os.str();
}

}  // namespace lmfcc::metrics
