"""Train LSTM forecasters across a grid of input window sizes and pick the
one that generalizes best on the validation partition.

Run: python3 demos/03_rnn_window_search.py
"""

import numpy as np

from volforge.rnn import RnnConfig, rnn_forecast_path, window_search
from volforge.synth import simulate_log_vol_cascade

rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                              length=1200, seed=1).rv
train, valid, test = rv[:900], rv[900:1050], rv[1050:]

base = RnnConfig(cell="lstm", units=10, epochs=10, learning_rate=0.01, seed=0)
model = window_search(train, valid, base, window_grid=[1, 3, 5, 10, 22, 40],
                      metric="MSE")

print(f"{'window':>7} {'validation MSE':>15}")
for w, v in model.search_log:
    marker = "  <- selected" if w == model.config.window else ""
    print(f"{w:>7} {v:>15.3e}{marker}")

fc = rnn_forecast_path(model, rv, 1050, len(rv))
mae = float(np.mean(np.abs(test - fc)))
naive_mae = float(np.mean(np.abs(test - rv[1049:-1])))
print(f"\ntest MAE: lstm {mae:.5f} vs naive {naive_mae:.5f}")
print(f"final training loss: {model.training_loss_curve[-1]:.3e}")
