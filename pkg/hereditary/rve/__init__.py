from hereditary.rve.model import RveModel, effective_elastic, effective_kernel_laplace
from hereditary.rve.sampling import GammaLaw, GrainDraws, GrainSampler, gamma_sample
from hereditary.rve.mesh import LayerMaterial, build_grain_cube, build_laminate, load_assembly
from hereditary.rve.solver import RveOracle, RveState, RveTimeStepper, solve_time_domain
