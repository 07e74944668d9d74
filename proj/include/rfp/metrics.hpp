#pragma once

#include <string>
#include <vector>

#include "rfp/model.hpp"
#include "rfp/train.hpp"

namespace rfp {

struct MetricsReport {
    int n_classes = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> precision;  // per class
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<int> confusion;  // row = true class, col = predicted
    size_t trainable_params = 0;
    size_t total_params = 0;
    double trainable_fraction = 0.0;

    int confusion_at(int true_c, int pred_c) const {
        return confusion[static_cast<size_t>(true_c) * n_classes + pred_c];
    }
};

// Confusion matrix, accuracy and macro F1 (absent predictions score 0).
MetricsReport metrics_from_predictions(const std::vector<int>& y_true,
                                       const std::vector<int>& y_pred, int n_classes);

// Argmax evaluation of a model over an index list.
MetricsReport evaluate(const MoEClassifier& model, const SpecDataset& data,
                       const std::vector<int>& idx, bool use_prompts);

uint64_t fnv1a(const std::string& s);

}  // namespace rfp
