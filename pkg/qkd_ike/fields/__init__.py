from qkd_ike.fields.Fields import *
