"""Checkpoint -> .nncw weight-file converter for the codec runtime."""

from .ckpt import CheckpointError, load_checkpoint
from .convert import ConversionReport, ConvertError, convert
from .nncw import NncwError, read, write
from .plan import PlanError, ShapePlan, fetch_plan
from .rules import (NameMapRule, RuleError, apply_transform, load_rules,
                    map_names, parse_rules)

__version__ = "0.1.0"
