"""Short-maturity asymptotics and Monte Carlo pricing for options on
leveraged exchange-traded funds under local volatility with jumps."""

from .asymptotics import (LeadingOrder, b1_call, b1_put, db1_dbeta,
                          default_probability, leading_price)
from .errorbounds import ErrorConstants, TruncationFn, error_constants, i2_error_bound
from .errors import (AtTheMoneyError, ConfigError, DefaultJumpError, DomainError,
                     LetfError, MoneynessError, NoSolutionError, QuadratureError,
                     ValidationError)
from .impliedvol import (IvExpansion, bs_call_price, bs_expansion, bs_invert,
                         bs_vega, iv_expansion)
from .levy import (KouParams, LeverageMap, LevyModel, VgParams, default_intensity,
                   density, integrate_payoff, sample_jump, transformed_density,
                   u_beta, u_beta_inv)
from .model import (DriftPair, LocalVol, MarketSpec, drift_gamma, drift_mu,
                    make_drifts, sigma)
from .montecarlo import (McConfig, McResult, PathState, SmileRow, estimate_price,
                         sample_vg_increment, simulate_path, smile, terminal_states)

__version__ = "0.1.0"
