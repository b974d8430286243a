"""Rectangle-rule explanations of black-box tabular classifiers.

Pipeline: a classifier's per-instance behavior is probed with local
perturbations over interpretable threshold features, giving one
contribution vector per instance; the stacked nonnegative contribution
matrix is factorized, the embedded explanations are clustered, and
each category ends up described by a small union of interval rules
whose fidelity to the model is scored with macro F1.
"""

from .blackbox import (BlackBoxModel, ForestConfig, ForestModel, FunctionModel,
                       OracleModel, connect_oracle, train_forest)
from .config import RunConfig, load_config, parse_config, save_config, serialize_config
from .errors import (ConfigError, DegenerateSplit, EmptyDataset, EmptyGrid,
                     HandshakeFailure, IndexOutOfRange, InsufficientData,
                     NoUsableFeatures, NonFiniteValue, OracleFailure, ParseError,
                     RankTooLarge, RuleboxError, SingleClassTraining, SpawnFailure,
                     TooManyClusters)
from .evaluation import (CategoryMetrics, FidelityReport, build_report, category_f1,
                         macro_f1, parse_structured_report, purity_summary,
                         render_report)
from .explain import (ContributionMatrix, InstanceExplanation, PerturbationConfig,
                      build_contribution_matrices, build_contribution_matrix,
                      explain_instance)
from .factorization import (Factorization, StackedMatrix, embed_explanations, nmf,
                            stack_nonnegative)
from .features import (FeatureCatalog, build_catalog, embed, embed_all,
                       feature_description, load_catalog, save_catalog)
from .matrixio import (load_contribution_matrix, load_matrix,
                       save_contribution_matrix, save_matrix)
from .rules import (EMPTY_RECTANGLE, CategoryExplanation, Clustering, ExtractionParams,
                    Interval, Rectangle, RectangleSource, cluster_embeddings,
                    default_theta_grid, extract_category, rectangle_contains,
                    rectangle_from_base, rules_from_cluster, search_params)
from .synth import example_rectangles, planted_dataset
from .tabular import (Dataset, LabeledDataset, label_with, load_dataset,
                      save_dataset, split)

__version__ = "0.1.0"
