from salsa.models.losses import (
    AaeLosses,
    AraeLosses,
    aae_discriminator_loss,
    aae_encoder_adversarial_loss,
    aae_losses,
    arae_critic_loss,
    arae_encoder_adversarial_loss,
    arae_generator_loss,
    arae_losses,
    reconstruction_accuracy,
    reconstruction_loss,
)
from salsa.models.salsa import (
    GREEDY,
    PHASE_PREFIXES,
    Mode,
    SalsaModel,
    SamplingStrategy,
    decode_texts,
    expected_parameter_count,
    sample_prior,
)

__all__ = [
    "GREEDY",
    "PHASE_PREFIXES",
    "AaeLosses",
    "AraeLosses",
    "Mode",
    "SalsaModel",
    "SamplingStrategy",
    "aae_discriminator_loss",
    "aae_encoder_adversarial_loss",
    "aae_losses",
    "arae_critic_loss",
    "arae_encoder_adversarial_loss",
    "arae_generator_loss",
    "arae_losses",
    "decode_texts",
    "expected_parameter_count",
    "reconstruction_accuracy",
    "reconstruction_loss",
    "sample_prior",
]
