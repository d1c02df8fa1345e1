"""Finite-precision Iwasawa-algebra arithmetic and p-tower class-group growth.

The library is organized bottom-up:

* `padic` -- exact arithmetic and Smith forms over Z/p^N;
* `iwasawa` -- polynomials in T = h - 1 at finite precision: omega
  elements, Weierstrass preparation, companion-matrix quotient orders;
* `hmodule` -- finite abelian p-groups with an action of a cyclic
  p-group through a distinguished automorphism;
* `tower` -- layer computation, stabilization checking and growth
  fitting for tower instances;
* `descent` -- synthetic finite Galois-descent models with twisted
  inertia sections and the brute-force oracle for the closed forms;
* `cli` -- the `ptower` command-line tool.
"""

from .padic import RingParams, ModularInt, ModMatrix, smith_form
from .iwasawa import (
    LambdaElement,
    DistinguishedPoly,
    WeierstrassData,
    omega,
    divmod_distinguished,
    mu_lambda,
    weierstrass_prepare,
    companion_order,
)
from .hmodule import (
    AbelianType,
    FiniteHModule,
    Submodule,
    make_module,
    span,
    quotient_type,
    rank_pi,
    sum_submodules,
    scale_submodule,
)
from .tower import (
    TowerInstance,
    LayerRecord,
    LayerReport,
    GrowthFit,
    StabilizationVerdict,
    ElementaryModule,
    PPowerSummand,
    DistinguishedSummand,
    layer,
    layer_sequence,
    check_stabilization,
    rank_stabilization,
    fit_growth,
    elementary_growth,
    random_instance,
)
from .descent import (
    DeltaGroup,
    FiniteGroupG,
    Section,
    DescentInstance,
    OracleReport,
    build_group,
    bruteforce_class_quotient,
    closed_form_quotient,
    compare_oracle,
    augmentation_check,
    compile_to_tower,
    random_descent_instance,
)

__version__ = "0.1.0"
