from qkd_ike.models.BaseModels import *
from qkd_ike.models.kms import *
from qkd_ike.models.ike import *
from qkd_ike.models.keys import *
from qkd_ike.models.transport import *
from qkd_ike.models.handshake import *
from qkd_ike.models.bench import *
