from qkd_ike.validators.validators import *
