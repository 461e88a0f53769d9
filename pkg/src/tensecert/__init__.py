"""Universal-rigidity certification for tensegrity frameworks."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Edge,
    FrameworkError,
    MemberKind,
    TensegrityFramework,
    center_configuration,
    load_framework,
    parse_framework,
    validate,
)
from .linalg import DEFAULT_TOL, Tolerances, psd_check  # noqa: E402
from .stress import StressAssignment, assemble_stress_matrix, find_proper_psd_stress, stress_space_basis  # noqa: E402
from .gale import gale_matrix, node_span_condition, special_gale_from_stress  # noqa: E402
from .affine import affine_flex_feasibility, domination_check  # noqa: E402
from .certify import (  # noqa: E402
    CertifyOptions,
    CertPath,
    RigidityCertificate,
    Verdict,
    certify_dimensional_rigidity,
    certify_universal_rigidity,
    verify_certificate,
)
from .fixtures import fixture_names, fixture_path, load_fixture  # noqa: E402
