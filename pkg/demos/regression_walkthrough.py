# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# # Survival in months: a continuous endpoint
#
# Same cohort, now predicting `Survival` directly.  Recursive feature
# elimination picks a subset first, then penalized and tree models compete
# under 5-fold cross validation.

# +
import os
import warnings

from clinpred.cli import svg
from clinpred.data import generate_synthetic_cohort, split_train_test
from clinpred.errors import ExtrapolationWarning
from clinpred.evaluation import overfit_gap, qq_points, regression_report
from clinpred.models.estimators import EstimatorSpec
from clinpred.models.tuning import TrainControl, predict, train_tuned
from clinpred.resample import ResamplingPlan
from clinpred.select import rfe_run

warnings.simplefilter("ignore", ExtrapolationWarning)
OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(OUT, exist_ok=True)
# -

# Switch the outcome: `Survival` becomes the target and the binary
# `TwelveMonths` is dropped, since it is derived from the target.

cohort = generate_synthetic_cohort(4000, seed=7).with_outcome("Survival", "regression").drop(["TwelveMonths"])
pair = split_train_test(cohort, 0.8, seed=7)
train, test = pair.train, pair.test

# ## Feature elimination
# Ranks come from the analysis rows of each fold; the profile is scored on
# the assessment rows.

rfe = rfe_run(train, EstimatorSpec("glm"), [2, 5, 8, 13, 20], ResamplingPlan("cv", 5, 7), seed=7)
for s in rfe.sizes:
    print(f"{s:3d} features  RMSE {rfe.profile[s]:.4f}")
print("kept:", rfe.selected)

# Keep the selected columns (plus the outcome).

train_sel = train.select([*rfe.selected, "Survival"])
with open(os.path.join(OUT, "rfe.svg"), "w") as fh:
    fh.write(svg.profile_svg(list(rfe.sizes), [rfe.profile[s] for s in rfe.sizes], rfe.best_size, "RMSE"))

# ## Model comparison

# +
ctrl = TrainControl(plan=ResamplingPlan("cv", 5, 7), seed=7)
specs = [EstimatorSpec("glm"), EstimatorSpec("ridge"), EstimatorSpec("lasso"),
         EstimatorSpec("rf", ({"mtry": 3, "n_trees": 100},))]
results = [train_tuned(train_sel, s, ctrl) for s in specs]
for r in results:
    print(f"{r.spec.algorithm:6s} CV RMSE {r.best_score:.4f}  MAE {r.extra['MAE']:.4f}  R2 {r.extra['Rsquared']:.4f}")
best = min(results, key=lambda r: r.best_score)
# -

# ## Test split
# A lower-is-better gap: the test RMSE should not exceed the training
# estimate by more than about ten percent.

pred = predict(best.best, test)
rep = regression_report(pred.values, test.y)
print(best.spec.algorithm, rep.as_dict())
print(overfit_gap(best.best_score, rep.rmse, "lower_is_better"))

# A Q-Q plot compares the predicted and observed distributions, the
# regression analogue of a calibration plot.

with open(os.path.join(OUT, "qq.svg"), "w") as fh:
    fh.write(svg.qq_svg(qq_points(pred.values, test.y)))
print("plots in", OUT)
