from diffuma import build_model, parse_config
from diffuma.data import SyntheticSpec, generate_synthetic


config = parse_config("[train]\nseed = 3\n")
model = build_model(config)

frames = generate_synthetic(
    SyntheticSpec(n_samples=2, frames=10, height=32, width=32, t_in=5),
)
x, y = frames.split()
prediction = model.predict(x)
assert prediction.fused.tensor.shape == y.tensor.shape
print(prediction.fused.tensor.shape)
