#include "rfp/metrics.hpp"

#include "rfp/errors.hpp"

namespace rfp {

MetricsReport metrics_from_predictions(const std::vector<int>& y_true,
                                       const std::vector<int>& y_pred, int n_classes) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw data_error("metrics: empty or mismatched prediction lists");
    MetricsReport r;
    r.n_classes = n_classes;
    r.confusion.assign(static_cast<size_t>(n_classes) * n_classes, 0);
    for (size_t i = 0; i < y_true.size(); ++i)
        r.confusion[static_cast<size_t>(y_true[i]) * n_classes + y_pred[i]]++;

    size_t trace = 0;
    for (int c = 0; c < n_classes; ++c) trace += static_cast<size_t>(r.confusion_at(c, c));
    r.accuracy = static_cast<double>(trace) / static_cast<double>(y_true.size());

    r.precision.resize(static_cast<size_t>(n_classes));
    r.recall.resize(static_cast<size_t>(n_classes));
    r.f1.resize(static_cast<size_t>(n_classes));
    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        long tp = r.confusion_at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += r.confusion_at(o, c);
            fn += r.confusion_at(c, o);
        }
        const double p = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f = (p + rec) > 0.0 ? 2.0 * p * rec / (p + rec) : 0.0;
        r.precision[static_cast<size_t>(c)] = p;
        r.recall[static_cast<size_t>(c)] = rec;
        r.f1[static_cast<size_t>(c)] = f;
        f1_sum += f;
    }
    r.macro_f1 = f1_sum / n_classes;
    return r;
}

MetricsReport evaluate(const MoEClassifier& model, const SpecDataset& data,
                       const std::vector<int>& idx, bool use_prompts) {
    if (idx.empty()) throw data_error("evaluate: empty test set");
    Tape tape;
    NoGrad pause(tape);
    std::vector<int> y_true, y_pred;
    y_true.reserve(idx.size());
    y_pred.reserve(idx.size());
    for (int i : idx) {
        auto out = model.forward(tape, data.specs[static_cast<size_t>(i)], use_prompts);
        int argmax = 0;
        for (int c = 1; c < static_cast<int>(out.logits.numel()); ++c)
            if (out.logits.at(c) > out.logits.at(argmax)) argmax = c;
        y_true.push_back(data.labels[static_cast<size_t>(i)]);
        y_pred.push_back(argmax);
        tape.clear();
    }
    return metrics_from_predictions(y_true, y_pred, model.config().n_classes);
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace rfp
