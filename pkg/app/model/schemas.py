"""Model configuration."""

from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import ConfigError

# Architecture defaults (embedding + 4 MLP modules, 2 blocks x 4 heads, width 256)
DEFAULT_D_MODEL = 256
DEFAULT_N_HEADS = 4
DEFAULT_N_LAYERS = 2
DEFAULT_EMBED_MLP_DEPTH = 4
DEFAULT_CLASSIFIER_HIDDEN = 256
FFN_EXPANSION = 4


class ModelConfig(BaseModel):
    """Shape of the decoder-only transformer."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    vocab_size: int = Field(ge=2)
    d_model: int = Field(default=DEFAULT_D_MODEL, ge=1)
    n_heads: int = Field(default=DEFAULT_N_HEADS, ge=1)
    n_layers: int = Field(default=DEFAULT_N_LAYERS, ge=0)
    embed_mlp_depth: int = Field(default=DEFAULT_EMBED_MLP_DEPTH, ge=0)
    max_seq_len: int = Field(ge=1)
    classifier_hidden: int = Field(default=DEFAULT_CLASSIFIER_HIDDEN, ge=1)
    dropout: float = Field(default=0.0, ge=0.0, le=0.0)

    @model_validator(mode="after")
    def check_heads(self) -> Self:
        """Attention heads must split ``d_model`` evenly."""
        if self.d_model % self.n_heads:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}",
                details={"d_model": self.d_model, "n_heads": self.n_heads},
            )
        return self

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    @property
    def ffn_hidden(self) -> int:
        return FFN_EXPANSION * self.d_model

    def parameter_count(self) -> int:
        """Closed-form number of scalar parameters."""
        d, v, h = self.d_model, self.vocab_size, self.classifier_hidden
        embedding = v * d + self.max_seq_len * d + self.embed_mlp_depth * (d * d + d)
        block = (
            2 * d  # ln1
            + 4 * (d * d + d)  # q, k, v, o
            + 2 * d  # ln2
            + (d * self.ffn_hidden + self.ffn_hidden)
            + (self.ffn_hidden * d + d)
        )
        classifier = 2 * d + (d * h + h) + (h * v + v)
        return embedding + self.n_layers * block + classifier
