"""Published reference estimates used as simulation defaults and replication targets.

Keys describe the estimate; values are the published numbers.
"""

from __future__ import annotations

# Stage-3 estimates of the three-stage procedure (sigma_g, sigma_z implied).
STAGE3_HLW = {
    "a_y1": 1.5295724693, "a_y2": -0.5875641351, "a_r": -0.0711956881, "b_pi": 0.6682070526,
    "b_y": 0.0789577841, "sigma_ygap": 0.3534684662, "sigma_pi": 0.7891948667,
    "sigma_ystar": 0.5724192433, "sigma_g": 0.03083567, "sigma_z": 0.15002080,
}

# Stage-2 estimates of the misspecified model with sigma_g tied to lambda_g.
STAGE2_HLW = {
    "a_y1": 1.5139908874, "a_y2": -0.5709338892, "a_r": -0.0736646651, "a_0": -0.2630693778,
    "a_g": 0.6078665690, "b_pi": 0.6627428246, "b_y": 0.0844720318, "sigma_ygap": 0.3582701554,
    "sigma_pi": 0.7872279652, "sigma_ystar": 0.5665698109,
}
STAGE2_HLW_LOGLIK = -513.5709576473
STAGE2_HLW_SIGMA_G = 0.0305205

LAMBDA_G_HLW = 0.0538690378
LAMBDA_Z_HLW = 0.030217

STAGE1_BOUNDED = {
    "a_y1": 1.51706921391, "a_y2": -0.52880365096, "b_pi": 0.71249401280, "b_y": 0.025,
    "g": 0.77639643600, "sigma_ygap": 0.53494313648, "sigma_pi": 0.80773566453,
    "sigma_ystar": 0.51191040251,
}
STAGE1_BOUNDED_LOGLIK = -531.87471383414
STAGE1_LAMBDA_G = {"L": 0.073287980348, "MW": 0.065180695002, "EW": 0.053869107878,
                   "QLR": 0.049381833434}

STAGE2_M0_MLE = {
    "a_y1": 1.4947610514, "a_y2": -0.5531450715, "a_r": -0.0755562707, "b_pi": 0.6692918543,
    "b_y": 0.0802934388, "sigma_ygap": 0.3742315512, "sigma_pi": 0.7895136932,
    "sigma_ystar": 0.5526272640, "sigma_g": 0.0448689280,
}
STAGE2_M0_LOGLIK = -514.1458025902
STAGE2_HLW_MLE_SIGMA_G = 0.0437060828

STAGE2_LAMBDA_Z = {
    ("hlw", "time_varying"): {"L": 0.0, "MW": 0.02496905, "EW": 0.03021723, "QLR": 0.03426471},
    ("hlw", "constant"): {"L": 0.0, "MW": 0.0, "EW": 0.0, "QLR": 0.0},
    ("m0", "time_varying"): {"MW": 0.00892013, "EW": 0.00779609, "QLR": 0.01719852},
    ("m0", "constant"): {"EW": 0.00075430, "QLR": 0.01470321},
}
STAGE2_BREAK_STATS = {
    ("hlw", "time_varying"): {"L": 0.05085088, "MW": 1.87056176, "EW": 1.69301457, "QLR": 8.71446298},
    ("hlw", "constant"): {"L": 0.05085088, "MW": 0.33010788, "EW": 0.20293551, "QLR": 2.85143418},
    ("m0", "constant"): {"L": 0.10830144, "MW": 0.65167084, "EW": 0.43448586, "QLR": 4.33470147},
}

STAGE3_LOGLIK = -515.1447059855
STAGE3_MLE_BOTH_LOGLIK = -514.2895896936
LAMBDA_Z_M0 = 0.000754

SW98_BREAK_STATS = {"L": 0.209398, "MW": 1.158779, "EW": 0.682116, "QLR": 3.310513}
SW98_LAMBDA = {"L": 4.0559, "MW": 3.4335, "EW": 3.0712, "QLR": 0.7786}

CLARK_UC0 = {"a_y1": 1.6688617339, "a_y2": -0.7242805140, "sigma_ystar": 0.5898417486,
             "sigma_g": 0.0463214922, "sigma_ygap": 0.3462603749, "loglik": -270.0007183929}
CLARK_UC_CORR = {"a_y1": 1.2954481785, "a_y2": -0.5674869068, "sigma_ystar": 1.1575382576,
                 "sigma_g": 0.0321901826, "sigma_ygap": 0.8095072197, "corr": -0.9426313454,
                 "loglik": -269.8750406078}

SIM_WITHOUT_Z_FIXED = {"mean": 0.02884249, "median": 0.02839441, "stdev": 0.01624549,
                       "exceed_prob": 0.4570}
SIM_WITH_Z_FIXED = {"mean": 0.03072566, "exceed_prob": 0.49}
SIM_UNIVARIATE = {"smoothed": {"mean": 0.03179750, "exceed_prob": 0.498},
                  "rw": {"mean": 0.02970785, "exceed_prob": 0.456},
                  "wn": {"mean": 0.02611747, "exceed_prob": 0.384},
                  "arma_diff": {"mean": 0.03044940, "exceed_prob": 0.482}}

# Local-level model on the 1947:Q2-1995:Q4 per-capita growth series.
SW98_MPLE = {"sigma_level": 0.0, "sigma_eps": 3.851994804846, "ar1": 0.337083211459,
             "ar2": 0.128903279894, "ar3": -0.009173836441, "ar4": -0.085644420982,
             "level0": 1.795899355603, "loglik": -539.772747031207}
SW98_MMLE = {"sigma_level": 0.044400981501, "sigma_eps": 3.858594227694, "ar1": 0.340252340453,
             "ar2": 0.130746074778, "ar3": -0.007251079335, "ar4": -0.082478616377,
             "loglik": -547.480464499946}
SW98_MUE_013 = {"sigma_level": 0.13, "sigma_eps": 3.846619226998, "ar1": 0.335014533140,
                "ar2": 0.127423133110, "ar3": -0.010170600327, "ar4": -0.086802971766,
                "level0": 2.440999263153, "loglik": -540.692677059246}

# Stage 1 in local-level form on annualised GDP growth, 1961:Q1-2017:Q1.
LOCAL_LEVEL_MPLE = {"sigma_level": 0.0, "sigma_eps": 2.99782489961, "ar1": 0.28603147365,
                    "ar2": 0.16828174224, "ar3": -0.02046076069, "ar4": 0.06570210187,
                    "level0": 3.02198580916, "loglik": -566.39181042995}
LOCAL_LEVEL_MMLE = {"sigma_level": 0.10621860661, "sigma_eps": 2.98030098731, "ar1": 0.27433173122,
                    "ar2": 0.16079307466, "ar3": -0.02734561640, "ar4": 0.05750551407,
                    "loglik": -573.64230971420}
LOCAL_LEVEL_MUE_EW = {"sigma_level": 0.12733451470, "sigma_eps": 2.97346405372,
                      "ar1": 0.26988229275, "ar2": 0.15789805142, "ar3": -0.02996690605,
                      "ar4": 0.05423838150, "level0": 4.09740641791, "loglik": -566.57435245187}
LOCAL_LEVEL_LAMBDA_EW = 4.8837

# EW lambda_g when trend growth is AR(1)-filtered before the break tests.
STAGE1_AR1_LAMBDA_G_EW = 0.07106819
