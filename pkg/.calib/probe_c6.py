import json, time, tempfile, pathlib
import torch
from chronosynth.data import iterate_triplets
from chronosynth.generator import GeneratorConfig
from chronosynth.synthetic import make_synthetic_dataset
from chronosynth.training import DiscriminatorSettings, TrainConfig, create_train_state, train

torch.set_num_threads(2)
tmp = pathlib.Path(tempfile.mkdtemp())
m = make_synthetic_dataset(tmp / "ds", seed=0, n_locations=4, image_size=64, lr_factor=8,
                           n_timestamps=2, test_fraction=0.0)
data = list(iterate_triplets(m, direction="all", split=None))
assert len(data) == 8

gen_cfg = GeneratorConfig(variant="ead", image_size=64, c_fea=32, z_dim=64, time_unit=2.0)
train_cfg = TrainConfig(batch_size=4, seed=0, r1_every=16, checkpoint_every=0)
state = create_train_state(gen_cfg, train_cfg, DiscriminatorSettings(base_channels=16, max_channels=64))

t0 = time.time()
hist = train(state, data, steps=2000)
elapsed = time.time() - t0
l1 = [h["l1"] for h in hist]
window = 50
means = [sum(l1[i-window:i])/window for i in range(window, len(l1)+1, 50)]
first_below = next((i*1 for i, h in enumerate(hist) if i >= window and sum(l1[i-window:i])/window < 0.05), None)
print(json.dumps({
    "elapsed_min": elapsed/60,
    "l1_final_window": sum(l1[-window:])/window,
    "first_step_below_0.05": first_below,
    "l1_trace": means[::4],
}))
