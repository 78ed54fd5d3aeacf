#pragma once

#include "efi/learn/cross_validation.hpp"
#include "efi/learn/model_io.hpp"
#include "efi/learn/normalizer.hpp"
#include "efi/learn/selection.hpp"

#include <string>
#include <vector>

namespace efi::learn {

struct TrainingResult {
    TrainedModel model;
    CVReport report;
    std::vector<std::string> dropped; // zero-variance features
};

// normalize -> correlation filter -> CV grid search, for one target.
inline TrainingResult train_attribute(const std::string& attribute, const Matrix& raw_features,
                                      const std::vector<std::string>& names, const std::vector<double>& targets,
                                      double keep_fraction, const CvOptions& cv) {
    if (targets.size() != raw_features.rows())
        throw DimensionError("target count does not match feature rows");
    TrainingResult out;
    const Normalizer full = fit_normalizer(raw_features, names);
    out.dropped = full.dropped;

    DesignMatrix standardized;
    standardized.x = apply_normalizer(full, raw_features);
    standardized.feature_names = full.names;
    standardized.targets = targets;

    const Selection sel = rank_features(standardized, keep_fraction);
    DesignMatrix chosen;
    chosen.x = standardized.x.select_cols(sel.columns);
    chosen.targets = targets;
    Normalizer restricted;
    for (std::size_t k = 0; k < sel.columns.size(); ++k) {
        const std::size_t j = sel.columns[k];
        chosen.feature_names.push_back(full.names[j]);
        restricted.names.push_back(full.names[j]);
        restricted.source_index.push_back(k);
        restricted.means.push_back(full.means[j]);
        restricted.stds.push_back(full.stds[j]);
    }

    auto [model, report] = cv_grid_search(chosen, cv);
    out.model.attribute = attribute;
    out.model.normalizer = std::move(restricted);
    out.model.model = std::move(model);
    out.report = std::move(report);
    return out;
}

} // namespace efi::learn
