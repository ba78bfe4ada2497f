from typing import Optional


class UDRLPGError(Exception):
    default_detail = "Policy generator error"

    def __init__(self, detail: Optional[str] = None):
        self.detail = detail or self.default_detail
        super().__init__(self.detail)


class ConfigurationError(UDRLPGError):
    default_detail = "Invalid configuration or mismatched dimensions"


class NonFiniteError(UDRLPGError):
    default_detail = "Encountered a non-finite value"


class StaleCacheError(UDRLPGError):
    default_detail = "Backward pass called with a cache from a different forward pass"


class EmptyBufferError(UDRLPGError):
    default_detail = "Replay buffer is empty: rollout stage must run first"


class CheckpointError(UDRLPGError):
    default_detail = "Checkpoint could not be loaded"


class TrainingAborted(UDRLPGError):
    default_detail = "Training aborted"

    def __init__(
        self,
        detail: Optional[str] = None,
        stage: Optional[int] = None,
        checkpoint_path: Optional[str] = None,
    ):
        self.stage = stage
        self.checkpoint_path = checkpoint_path
        super().__init__(detail)
