"""Tiny U-Net oil-slick thickness segmentation toolkit.

Thin python surface over the C++ core: model construction, forward
inference, training, post-training quantization, evaluation metrics, and
the synthetic radar scene generator.
"""

from ._tinyunet import (
    ModelConfig,
    QuantizedModel,
    SceneConfig,
    SceneSet,
    TinyUNetError,
    TrainConfig,
    UNetModel,
    build_model,
    channel_schedule,
    confusion_metrics,
    conv2d_forward,
    evaluate_miou,
    evaluate_miou_quantized,
    forward,
    generate_set,
    layered_reflectance,
    load_model,
    load_quantized_model,
    mac_count,
    model_size_mib,
    param_count,
    quantize_model,
    quantize_values,
    quantized_forward,
    roughness_attenuation,
    save_model,
    save_quantized_model,
    softmax_channels,
    train,
    water_permittivity,
)

__all__ = [
    "ModelConfig",
    "QuantizedModel",
    "SceneConfig",
    "SceneSet",
    "TinyUNetError",
    "TrainConfig",
    "UNetModel",
    "build_model",
    "channel_schedule",
    "confusion_metrics",
    "conv2d_forward",
    "evaluate_miou",
    "evaluate_miou_quantized",
    "forward",
    "generate_set",
    "layered_reflectance",
    "load_model",
    "load_quantized_model",
    "mac_count",
    "model_size_mib",
    "param_count",
    "quantize_model",
    "quantize_values",
    "quantized_forward",
    "roughness_attenuation",
    "save_model",
    "save_quantized_model",
    "softmax_channels",
    "train",
    "water_permittivity",
]
