"""Fit both V_max estimators on the oracle dataset and compare them."""

from fcmppt.anfis import anfis_forward, anfis_train
from fcmppt.fuelcell import StackParams
from fcmppt.ica import IcaConfig, ica_train, mlp_forward
from fcmppt.metrics import correlation, mse
from fcmppt.oracle import generate_dataset, testing_grid, training_grid

stack = StackParams()
train = generate_dataset(stack, *training_grid())
test = generate_dataset(stack, *testing_grid())
x, y = train.normalized()
xt, yt = test.normalized(train.norm)
print(f"{len(train)} training pairs, {len(test)} held-out pairs")

anfis, trace = anfis_train(x, y, 70, norm=train.norm)
print(f"\nANFIS  RMSE after epoch 1: {trace[0]:.2e}, after 70: {trace[-1]:.2e}")
pred = anfis_forward(anfis, xt[:, 0], xt[:, 1])
print(f"       test MSE {mse(pred, yt):.2e}, correlation {correlation(pred, yt):.5f}")

res = ica_train(IcaConfig(), x, y, norm=train.norm)
print(f"\nICA-NN best cost by decade 1/10/65: {res.best_cost_trace[0]:.2e} / "
      f"{res.best_cost_trace[9]:.2e} / {res.best_cost_trace[-1]:.2e}")
print(f"       empires left: {res.empire_counts[-1]}")
pred = mlp_forward(res.network, xt[:, 0], xt[:, 1])
print(f"       test MSE {mse(pred, yt):.2e}, correlation {correlation(pred, yt):.5f}")

t, lam = 340.0, 11.3
print(f"\nV_max at {t} K, lambda {lam}: ANFIS {anfis(t, lam):.3f} V, "
      f"ICA-NN {res.network(t, lam):.3f} V")
