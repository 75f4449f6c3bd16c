"""Test factories for generating test data."""

from tests.factories.experiments import ExperimentConfigFactory
from tests.factories.runs import RunRecordFactory

__all__ = ["ExperimentConfigFactory", "RunRecordFactory"]
