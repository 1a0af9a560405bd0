import yaml
from yaml.representer import Representer
from yaml.emitter import Emitter
from yaml.serializer import Serializer
from yaml.resolver import Resolver

# Keys pulled to the top of a mapping, in this order
LEADING_KEYS = ["mode", "status", "success", "phase", "label"]
# Keys pushed to the bottom of a mapping (long lists)
TRAILING_KEYS = ["trace", "samples"]
# Scalar lists up to this length are written on one line
FLOW_LIST_MAX = 16


class CustomYamlRepresenter(Representer):

    def represent_none(self, data):
        return self.represent_scalar(u'tag:yaml.org,2002:null', u'')

    def represent_str(self, data):
        if "\n" in data:
            return self.represent_scalar(u'tag:yaml.org,2002:str', data, style="|")
        return self.represent_scalar(u'tag:yaml.org,2002:str', data)

    def represent_list(self, data):
        flow = len(data) <= FLOW_LIST_MAX and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data)
        return self.represent_sequence(u'tag:yaml.org,2002:seq', data, flow_style=flow)

    def represent_dict(self, data):
        data_keys = list(data.keys())
        for position, key in enumerate([k for k in LEADING_KEYS if k in data_keys]):
            data_keys.insert(position, data_keys.pop(data_keys.index(key)))
        for key in [k for k in TRAILING_KEYS if k in data_keys]:
            data_keys.append(data_keys.pop(data_keys.index(key)))
        values = [(self.represent_data(key), self.represent_data(data[key])) for key in data_keys]
        return yaml.nodes.MappingNode(u'tag:yaml.org,2002:map', values)


CustomYamlRepresenter.add_representer(type(None), CustomYamlRepresenter.represent_none)
CustomYamlRepresenter.add_representer(str, CustomYamlRepresenter.represent_str)
CustomYamlRepresenter.add_representer(list, CustomYamlRepresenter.represent_list)
CustomYamlRepresenter.add_representer(dict, CustomYamlRepresenter.represent_dict)


class CustomYamlDumper(Emitter, Serializer, CustomYamlRepresenter, Resolver):
    """Dumper for serial_dict() output: plain JSON types only, results read top down."""

    def __init__(self, stream,
                 default_style=None, default_flow_style=False,
                 canonical=None, indent=None, width=None,
                 allow_unicode=None, line_break=None,
                 encoding=None, explicit_start=None, explicit_end=None, sort_keys=False,
                 version=None, tags=None):
        Emitter.__init__(self, stream, canonical=canonical,
                         indent=indent, width=width,
                         allow_unicode=allow_unicode, line_break=line_break)
        Serializer.__init__(self, encoding=encoding,
                            explicit_start=explicit_start, explicit_end=explicit_end,
                            version=version, tags=tags)
        CustomYamlRepresenter.__init__(self, default_style=default_style,
                                       default_flow_style=default_flow_style, sort_keys=sort_keys)
        Resolver.__init__(self)

    def increase_indent(self, flow=False, indentless=False):
        return super(CustomYamlDumper, self).increase_indent(flow=flow, indentless=False)
