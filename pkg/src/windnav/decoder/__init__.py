"""Learned local wind-field prediction from range + sparse wind inputs."""

from .analysis import (
    baseline_predict,
    components_for_variance,
    dataset_errors,
    divergence_magnitude,
    field_errors,
    field_gradients,
    mosaic,
    pca_eigenflows,
)
from .dataset import (
    GridSpec,
    LocalWindField,
    TrainingExample,
    WindDataset,
    WindowError,
    free_window_positions,
    load_dataset,
    sample_local_field,
    sample_training_example,
    save_dataset,
)
from .mlp import (
    MlpModel,
    TrainConfig,
    evaluate_loss,
    init_model,
    load_model,
    loss_and_grads,
    mlp_forward,
    predict_batch,
    save_model,
    train,
)
