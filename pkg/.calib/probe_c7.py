import json, time, tempfile, pathlib
import torch
from chronosynth.data import iterate_triplets, resample_nearest
from chronosynth.generator import GeneratorConfig
from chronosynth.inference import generator_image_source
from chronosynth.metrics import evaluate_dataset
from chronosynth.synthetic import make_synthetic_dataset
from chronosynth.training import DiscriminatorSettings, TrainConfig, create_train_state, train

torch.set_num_threads(2)
tmp = pathlib.Path(tempfile.mkdtemp())
m = make_synthetic_dataset(tmp / "ds", seed=101, n_locations=64, image_size=64, lr_factor=8,
                           n_timestamps=2, noise_sigma=0.01, test_fraction=0.25)
data = list(iterate_triplets(m, direction="all", split="train"))
print("train triplets:", len(data), flush=True)

def baseline(sample):
    return resample_nearest(sample.lr_t, 64, 64).values

base = evaluate_dataset(m, baseline, metric_names=("psnr", "ssim"), direction="all", split="test").aggregates()["all"]
print("baseline:", base, flush=True)

gen_cfg = GeneratorConfig(variant="ead", image_size=64, c_fea=32, z_dim=64, time_unit=2.0)
for seed in (0,):
    train_cfg = TrainConfig(batch_size=2, seed=seed, r1_every=16, checkpoint_every=0)
    state = create_train_state(gen_cfg, train_cfg, DiscriminatorSettings(base_channels=16, max_channels=64))
    t0 = time.time()
    for chunk in range(5):
        train(state, data, steps=1000)
        src = generator_image_source(state.generator, z_policy="per_pair", seed=7)
        with torch.no_grad():
            agg = evaluate_dataset(m, src, metric_names=("psnr", "ssim"),
                                   direction="all", split="test").aggregates()["all"]
        print(json.dumps({
            "seed": seed, "steps": (chunk+1)*1000, "minutes": (time.time()-t0)/60,
            "psnr": agg["psnr"], "ssim": agg["ssim"],
            "beats": agg["psnr"] > base["psnr"] and agg["ssim"] > base["ssim"],
        }), flush=True)
