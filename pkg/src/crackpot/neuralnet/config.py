from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InvalidParameterError

FIRE_NAMES = ("fire2", "fire3", "fire4")


@dataclass(frozen=True)
class NetworkConfig:
    """Topology of the fire-module classifier with an encoding head.

    ``fire`` lists ``(squeeze, expand)`` widths per fire module; each expand
    branch (1x1 and 3x3) has ``expand`` filters, so a module emits
    ``2 * expand`` channels.
    """

    in_channels: int = 3
    patch_size: int = 64
    conv1_filters: int = 32
    fire: tuple[tuple[int, int], ...] = field(default=((16, 32), (16, 32), (32, 64)))
    codewords: int = 32
    num_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "fire", tuple(tuple(int(v) for v in f) for f in self.fire))
        if len(self.fire) != len(FIRE_NAMES):
            raise InvalidParameterError(f"expected {len(FIRE_NAMES)} fire modules, got {len(self.fire)}")
        values = [self.in_channels, self.patch_size, self.conv1_filters, self.codewords]
        values += [v for f in self.fire for v in f]
        if min(values) < 1:
            raise InvalidParameterError(f"all network widths must be >= 1: {self}")
        if self.in_channels not in (1, 3):
            raise InvalidParameterError(f"in_channels must be 1 or 3, got {self.in_channels}")
        if self.num_classes != 2:
            raise InvalidParameterError("only two-class networks are supported")

    @property
    def descriptor_dim(self) -> int:
        return 2 * self.fire[-1][1]

    def to_ints(self) -> list[int]:
        out = [self.in_channels, self.patch_size, self.conv1_filters]
        for squeeze, expand in self.fire:
            out += [squeeze, expand]
        return out + [self.codewords, self.num_classes]

    @classmethod
    def from_ints(cls, values) -> "NetworkConfig":
        v = [int(x) for x in values]
        if len(v) != 11:
            raise InvalidParameterError(f"config needs 11 integers, got {len(v)}")
        return cls(
            in_channels=v[0],
            patch_size=v[1],
            conv1_filters=v[2],
            fire=((v[3], v[4]), (v[5], v[6]), (v[7], v[8])),
            codewords=v[9],
            num_classes=v[10],
        )


# configuration used for finite-difference gradient checks
SMALL_CONFIG = NetworkConfig(
    in_channels=3,
    patch_size=16,
    conv1_filters=4,
    fire=((2, 4), (2, 4), (4, 8)),
    codewords=4,
)


def spatial_after_stack(side: int) -> int:
    """Spatial side of the encoding input for a square input of ``side`` pixels."""
    s = (side + 2 - 3) // 2 + 1  # conv1, 3x3 stride 2 pad 1
    s //= 2
    return s // 2


def param_shapes(cfg: NetworkConfig) -> dict[str, tuple[int, ...]]:
    shapes = {
        "conv1.w": (cfg.conv1_filters, cfg.in_channels, 3, 3),
        "conv1.b": (cfg.conv1_filters,),
    }
    in_ch = cfg.conv1_filters
    for name, (squeeze, expand) in zip(FIRE_NAMES, cfg.fire):
        shapes[f"{name}.squeeze.w"] = (squeeze, in_ch, 1, 1)
        shapes[f"{name}.squeeze.b"] = (squeeze,)
        shapes[f"{name}.expand1x1.w"] = (expand, squeeze, 1, 1)
        shapes[f"{name}.expand1x1.b"] = (expand,)
        shapes[f"{name}.expand3x3.w"] = (expand, squeeze, 3, 3)
        shapes[f"{name}.expand3x3.b"] = (expand,)
        in_ch = 2 * expand
    k, d = cfg.codewords, cfg.descriptor_dim
    shapes["encoding.codewords"] = (k, d)
    shapes["encoding.smoothing"] = (k,)
    shapes["fc.w"] = (cfg.num_classes, k * d)
    shapes["fc.b"] = (cfg.num_classes,)
    return shapes


def param_count(cfg: NetworkConfig) -> int:
    total = 0
    for shape in param_shapes(cfg).values():
        n = 1
        for e in shape:
            n *= e
        total += n
    return total
